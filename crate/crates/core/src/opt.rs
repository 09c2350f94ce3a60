//! Bounded scalar optimization by golden-section search.

/// Maximize `f` on [lo, hi] by golden-section search down to the given
/// interval width, returning (argmax, max). `f` should be unimodal on the
/// bracket; callers seed the bracket with a coarse scan when it is not.
pub fn golden_section_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, width: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > width {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Minimize `f` on [lo, hi]; thin wrapper over [`golden_section_max`].
pub fn golden_section_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, width: f64) -> (f64, f64) {
    let (x, neg) = golden_section_max(|t| -f(t), lo, hi, width);
    (x, -neg)
}
