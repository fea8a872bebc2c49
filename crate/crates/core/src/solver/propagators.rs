//! Narrowing functions. Each takes the current domains and returns subsets
//! that keep every solution of the constraint.

use super::constraint::{ArithOp, CmpOp};
use super::domain::Domain;

const LIMIT: i128 = 1 << 62;

fn clamp(v: i128) -> i64 {
    v.clamp(-LIMIT, LIMIT) as i64
}

fn range(lo: i128, hi: i128) -> Domain {
    if lo > hi {
        Domain::empty()
    } else {
        Domain::range(clamp(lo), clamp(hi))
    }
}

fn hull(d: &Domain) -> (i128, i128) {
    (d.min() as i128, d.max() as i128)
}

fn corners(a: (i128, i128), b: (i128, i128), f: impl Fn(i128, i128) -> i128) -> (i128, i128) {
    let c = [f(a.0, b.0), f(a.0, b.1), f(a.1, b.0), f(a.1, b.1)];
    (*c.iter().min().unwrap(), *c.iter().max().unwrap())
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) == (b < 0)) {
        q + 1
    } else {
        q
    }
}

/// Negative and positive parts of `d`, zero excluded.
fn sign_parts(d: &Domain) -> impl Iterator<Item = (i128, i128)> {
    let neg = d.prev_le(-1).map(|hi| (d.min() as i128, hi as i128));
    let pos = d.next_ge(1).map(|lo| (lo as i128, d.max() as i128));
    neg.into_iter().chain(pos)
}

fn union_of(parts: impl Iterator<Item = Domain>) -> Domain {
    parts.fold(Domain::empty(), |acc, d| acc.union(&d))
}

/// Values `f` such that `f * g ∈ prod` for some `g ∈ other`; `None` when unrestricted.
fn factor(prod: &Domain, other: &Domain) -> Option<Domain> {
    if other.contains(0) && prod.contains(0) {
        return None;
    }
    let p = hull(prod);
    Some(union_of(sign_parts(other).map(|g| {
        let lo = [ceil_div(p.0, g.0), ceil_div(p.0, g.1), ceil_div(p.1, g.0), ceil_div(p.1, g.1)];
        let hi = [floor_div(p.0, g.0), floor_div(p.0, g.1), floor_div(p.1, g.0), floor_div(p.1, g.1)];
        range(*lo.iter().min().unwrap(), *hi.iter().max().unwrap())
    })))
}

fn min_magnitude(d: &Domain) -> Option<i64> {
    let pos = d.next_ge(0);
    let neg = d.prev_le(0).map(|v| -v);
    match (pos, neg) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

/// Narrows `x = y op z`. An empty component means failure.
pub(crate) fn arith(op: ArithOp, x: &Domain, y: &Domain, z: &Domain) -> [Domain; 3] {
    if x.is_empty() || y.is_empty() || z.is_empty() {
        return [Domain::empty(), Domain::empty(), Domain::empty()];
    }
    let fail = || [Domain::empty(), Domain::empty(), Domain::empty()];
    match op {
        ArithOp::Add => {
            if let Some(c) = z.value() {
                let nx = x.intersect(&y.shift(c));
                let ny = y.intersect(&nx.shift(-c));
                return [nx, ny, z.clone()];
            }
            if let Some(c) = y.value() {
                let nx = x.intersect(&z.shift(c));
                let nz = z.intersect(&nx.shift(-c));
                return [nx, y.clone(), nz];
            }
            let (yl, yh) = hull(y);
            let (zl, zh) = hull(z);
            let nx = x.intersect(&range(yl + zl, yh + zh));
            if nx.is_empty() {
                return fail();
            }
            let (xl, xh) = hull(&nx);
            let ny = y.intersect(&range(xl - zh, xh - zl));
            if ny.is_empty() {
                return fail();
            }
            let (yl, yh) = hull(&ny);
            let nz = z.intersect(&range(xl - yh, xh - yl));
            [nx, ny, nz]
        }
        ArithOp::Sub => {
            if let Some(c) = z.value() {
                let nx = x.intersect(&y.shift(-c));
                let ny = y.intersect(&nx.shift(c));
                return [nx, ny, z.clone()];
            }
            if let Some(c) = y.value() {
                let nx = x.intersect(&z.negate().shift(c));
                let nz = z.intersect(&nx.negate().shift(c));
                return [nx, y.clone(), nz];
            }
            let (yl, yh) = hull(y);
            let (zl, zh) = hull(z);
            let nx = x.intersect(&range(yl - zh, yh - zl));
            if nx.is_empty() {
                return fail();
            }
            let (xl, xh) = hull(&nx);
            let ny = y.intersect(&range(xl + zl, xh + zh));
            if ny.is_empty() {
                return fail();
            }
            let (yl, yh) = hull(&ny);
            let nz = z.intersect(&range(yl - xh, yh - xl));
            [nx, ny, nz]
        }
        ArithOp::Mul => {
            let (lo, hi) = corners(hull(y), hull(z), |a, b| a * b);
            let nx = x.intersect(&range(lo, hi));
            if nx.is_empty() {
                return fail();
            }
            let mut ny = y.clone();
            let mut nz = z.clone();
            if !nx.contains(0) {
                ny = ny.remove(0);
                nz = nz.remove(0);
            }
            if let Some(f) = factor(&nx, &nz) {
                ny = ny.intersect(&f);
            }
            if ny.is_empty() {
                return fail();
            }
            if let Some(f) = factor(&nx, &ny) {
                nz = nz.intersect(&f);
            }
            [nx, ny, nz]
        }
        ArithOp::Div => {
            let nz = z.remove(0);
            if nz.is_empty() {
                return fail();
            }
            let yh = hull(y);
            let fwd = union_of(sign_parts(&nz).map(|p| {
                let (lo, hi) = corners(yh, p, |a, b| a / b);
                range(lo, hi)
            }));
            let nx = x.intersect(&fwd);
            if nx.is_empty() {
                return fail();
            }
            let xh = hull(&nx);
            let back = union_of(sign_parts(&nz).map(|p| {
                let m = p.0.abs().max(p.1.abs());
                let (lo, hi) = corners(xh, p, |a, b| a * b);
                range(lo - (m - 1), hi + (m - 1))
            }));
            let ny = y.intersect(&back);
            [nx, ny, nz]
        }
        ArithOp::Rem => {
            let mut nz = z.remove(0);
            if nz.is_empty() {
                return fail();
            }
            if let (Some(a), Some(b)) = (y.value(), nz.value()) {
                let v = (a as i128 % b as i128) as i64;
                return [x.intersect(&Domain::singleton(v)), y.clone(), nz];
            }
            let m = (nz.min() as i128).abs().max((nz.max() as i128).abs());
            let (yl, yh) = hull(y);
            let lo = if yl < 0 { yl.max(-(m - 1)) } else { 0 };
            let hi = if yh > 0 { yh.min(m - 1) } else { 0 };
            let mut nx = x.intersect(&range(lo, hi));
            let mut ny = y.clone();
            let ymag = yl.abs().max(yh.abs());
            if let Some(mz) = min_magnitude(&nz) {
                if ymag < mz as i128 {
                    nx = nx.intersect(&ny);
                    ny = ny.intersect(&nx);
                }
            }
            if nx.is_empty() || ny.is_empty() {
                return fail();
            }
            if nx.min() > 0 {
                ny = ny.restrict(nx.min(), i64::MAX);
            } else if nx.max() < 0 {
                ny = ny.restrict(i64::MIN, nx.max());
            }
            if !nx.contains(0) {
                if let Some(mx) = min_magnitude(&nx) {
                    nz = nz.remove_range(-mx, mx);
                }
            }
            [nx, ny, nz]
        }
    }
}

/// Narrows `x op y` for two variables.
pub(crate) fn cmp(op: CmpOp, x: &Domain, y: &Domain) -> [Domain; 2] {
    if x.is_empty() || y.is_empty() {
        return [Domain::empty(), Domain::empty()];
    }
    match op {
        CmpOp::Eq => {
            let d = x.intersect(y);
            [d.clone(), d]
        }
        CmpOp::Ne => match (x.value(), y.value()) {
            (Some(a), _) => [x.clone(), y.remove(a)],
            (_, Some(b)) => [x.remove(b), y.clone()],
            _ => [x.clone(), y.clone()],
        },
        CmpOp::Lt => {
            let nx = x.restrict(i64::MIN, y.max() - 1);
            let ny = if nx.is_empty() {
                Domain::empty()
            } else {
                y.restrict(nx.min() + 1, i64::MAX)
            };
            [nx, ny]
        }
        CmpOp::Le => {
            let nx = x.restrict(i64::MIN, y.max());
            let ny = if nx.is_empty() {
                Domain::empty()
            } else {
                y.restrict(nx.min(), i64::MAX)
            };
            [nx, ny]
        }
        CmpOp::Gt => {
            let [ny, nx] = cmp(CmpOp::Lt, y, x);
            [nx, ny]
        }
        CmpOp::Ge => {
            let [ny, nx] = cmp(CmpOp::Le, y, x);
            [nx, ny]
        }
    }
}
