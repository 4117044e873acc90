//! Fixed-size matrix arithmetic for the 4-state / 2-measurement filter.

/// 2-component measurement-space vector.
pub type Vec2 = [f64; 2];
/// 4-component state-space vector.
pub type Vec4 = [f64; 4];
/// 2x2 measurement-space matrix.
pub type Mat2 = [[f64; 2]; 2];
/// 4x4 state-space matrix.
pub type Mat4 = [[f64; 4]; 4];
/// 2x4 state-to-measurement matrix.
pub type Mat2x4 = [[f64; 4]; 2];
/// 4x2 measurement-to-state matrix.
pub type Mat4x2 = [[f64; 2]; 4];

pub fn identity4(scale: f64) -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = scale;
    }
    m
}

/// A * B for 4x4 matrices.
pub fn mul4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = 0.0;
            for (k, bk) in b.iter().enumerate() {
                acc += a[i][k] * bk[j];
            }
            out[i][j] = acc;
        }
    }
    out
}

/// A * B^T for 4x4 matrices.
pub fn mul4_bt(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = 0.0;
            for k in 0..4 {
                acc += a[i][k] * b[j][k];
            }
            out[i][j] = acc;
        }
    }
    out
}

pub fn add4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = *a;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] += b[i][j];
        }
    }
    out
}

pub fn sub4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = *a;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] -= b[i][j];
        }
    }
    out
}

/// (A + A^T) / 2.
pub fn symmetrize4(a: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = 0.5 * (a[i][j] + a[j][i]);
        }
    }
    out
}

pub fn mul4v(a: &Mat4, v: &Vec4) -> Vec4 {
    let mut out = [0.0; 4];
    for (i, row) in a.iter().enumerate() {
        out[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
    }
    out
}

/// H * M for a 2x4 H and 4x4 M.
pub fn mul24_4(h: &Mat2x4, m: &Mat4) -> Mat2x4 {
    let mut out = [[0.0; 4]; 2];
    for (i, hrow) in h.iter().enumerate() {
        for j in 0..4 {
            let mut acc = 0.0;
            for (k, mk) in m.iter().enumerate() {
                acc += hrow[k] * mk[j];
            }
            out[i][j] = acc;
        }
    }
    out
}

/// A * B^T for 2x4 A and 2x4 B.
pub fn mul24_24bt(a: &Mat2x4, b: &Mat2x4) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for (i, arow) in a.iter().enumerate() {
        for (j, brow) in b.iter().enumerate() {
            out[i][j] =
                arow[0] * brow[0] + arow[1] * brow[1] + arow[2] * brow[2] + arow[3] * brow[3];
        }
    }
    out
}

/// M * H^T for a 4x4 M and 2x4 H.
pub fn mul4_24bt(m: &Mat4, h: &Mat2x4) -> Mat4x2 {
    let mut out = [[0.0; 2]; 4];
    for (i, mrow) in m.iter().enumerate() {
        for (j, hrow) in h.iter().enumerate() {
            out[i][j] =
                mrow[0] * hrow[0] + mrow[1] * hrow[1] + mrow[2] * hrow[2] + mrow[3] * hrow[3];
        }
    }
    out
}

/// A * B for 4x2 A and 2x2 B.
pub fn mul42_2(a: &Mat4x2, b: &Mat2) -> Mat4x2 {
    let mut out = [[0.0; 2]; 4];
    for (i, arow) in a.iter().enumerate() {
        for j in 0..2 {
            out[i][j] = arow[0] * b[0][j] + arow[1] * b[1][j];
        }
    }
    out
}

/// A * B^T for 4x2 A and 4x2 B.
pub fn mul42_42bt(a: &Mat4x2, b: &Mat4x2) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for (i, arow) in a.iter().enumerate() {
        for (j, brow) in b.iter().enumerate() {
            out[i][j] = arow[0] * brow[0] + arow[1] * brow[1];
        }
    }
    out
}

pub fn mul24v(h: &Mat2x4, v: &Vec4) -> Vec2 {
    [
        h[0][0] * v[0] + h[0][1] * v[1] + h[0][2] * v[2] + h[0][3] * v[3],
        h[1][0] * v[0] + h[1][1] * v[1] + h[1][2] * v[2] + h[1][3] * v[3],
    ]
}

pub fn mul42v(w: &Mat4x2, v: &Vec2) -> Vec4 {
    let mut out = [0.0; 4];
    for (i, row) in w.iter().enumerate() {
        out[i] = row[0] * v[0] + row[1] * v[1];
    }
    out
}

pub fn mul2v(s: &Mat2, v: &Vec2) -> Vec2 {
    [
        s[0][0] * v[0] + s[0][1] * v[1],
        s[1][0] * v[0] + s[1][1] * v[1],
    ]
}

#[cfg(test)]
pub fn trace4(m: &Mat4) -> f64 {
    m[0][0] + m[1][1] + m[2][2] + m[3][3]
}

pub fn finite4(m: &Mat4) -> bool {
    m.iter().all(|row| row.iter().all(|v| v.is_finite()))
}
