//! Independent reference implementation for cross-checking the library.
//! Deliberately written with plain arrays and no shared code: its own matrix
//! product, its own chain composition, its own angle extraction.

pub type M4 = [[f64; 4]; 4];

pub fn identity() -> M4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn mul(a: &M4, b: &M4) -> M4 {
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

pub fn translation(axis: usize, v: f64) -> M4 {
    let mut m = identity();
    m[axis][3] = v;
    m
}

pub fn rotation(axis: usize, v: f64) -> M4 {
    let (s, c) = v.sin_cos();
    let mut m = identity();
    match axis {
        0 => {
            m[1][1] = c;
            m[1][2] = -s;
            m[2][1] = s;
            m[2][2] = c;
        }
        1 => {
            m[0][0] = c;
            m[0][2] = s;
            m[2][0] = -s;
            m[2][2] = c;
        }
        2 => {
            m[0][0] = c;
            m[0][1] = -s;
            m[1][0] = s;
            m[1][1] = c;
        }
        _ => panic!("axis out of range"),
    }
    m
}

/// Chain transform: Tz(e) Ry(q1) Tx(L) Tx(t1) Ty(t2) Tz(t3) Rx(r4) Ry(r5)
/// Rz(r6) Ry(q2) Tz(-e), with e = -d/2 for chain 1 and +d/2 for chain 2.
pub fn chain_matrix(length: f64, width: f64, chain: usize, q: &[f64; 2], th: &[f64; 6]) -> M4 {
    let e = if chain == 1 { -width / 2.0 } else { width / 2.0 };
    let factors = [
        translation(2, e),
        rotation(1, q[0]),
        translation(0, length),
        translation(0, th[0]),
        translation(1, th[1]),
        translation(2, th[2]),
        rotation(0, th[3]),
        rotation(1, th[4]),
        rotation(2, th[5]),
        rotation(1, q[1]),
        translation(2, -e),
    ];
    let mut t = identity();
    for f in &factors {
        t = mul(&t, f);
    }
    t
}

/// Position plus x-y-z intrinsic angles of R = Rx(a) Ry(b) Rz(c).
pub fn pose_of(m: &M4) -> [f64; 6] {
    let b = m[0][2].asin();
    let c = (-m[0][1]).atan2(m[0][0]);
    let a = (-m[1][2]).atan2(m[2][2]);
    [m[0][3], m[1][3], m[2][3], a, b, c]
}

pub fn chain_pose(length: f64, width: f64, chain: usize, q: &[f64; 2], th: &[f64; 6]) -> [f64; 6] {
    pose_of(&chain_matrix(length, width, chain, q, th))
}

/// Central finite differences of the pose over (q, th); columns ordered
/// q1, q2, t1..r6.
pub fn fd_pose_jacobian(
    length: f64,
    width: f64,
    chain: usize,
    q: &[f64; 2],
    th: &[f64; 6],
    h: f64,
) -> [[f64; 8]; 6] {
    let mut jac = [[0.0; 8]; 6];
    for k in 0..8 {
        let mut qp = *q;
        let mut qm = *q;
        let mut tp = *th;
        let mut tm = *th;
        if k < 2 {
            qp[k] += h;
            qm[k] -= h;
        } else {
            tp[k - 2] += h;
            tm[k - 2] -= h;
        }
        let pp = chain_pose(length, width, chain, &qp, &tp);
        let pm = chain_pose(length, width, chain, &qm, &tm);
        for r in 0..6 {
            jac[r][k] = (pp[r] - pm[r]) / (2.0 * h);
        }
    }
    jac
}
