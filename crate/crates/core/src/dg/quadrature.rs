/// Two-point Gauss rule on `[0, 1]` as `(s, weight)`; weights sum to one.
pub fn gauss2() -> [(f64, f64); 2] {
    let d = 0.5 / 3f64.sqrt();
    [(0.5 - d, 0.5), (0.5 + d, 0.5)]
}

/// Seven-point degree-5 rule on a triangle as `(barycentric, weight)`;
/// weights sum to one.
pub fn triangle7() -> [([f64; 3], f64); 7] {
    let r = 15f64.sqrt();
    let a = (6.0 - r) / 21.0;
    let b = (6.0 + r) / 21.0;
    let wa = (155.0 - r) / 1200.0;
    let wb = (155.0 + r) / 1200.0;
    let c = 1.0 / 3.0;
    [
        ([c, c, c], 9.0 / 40.0),
        ([a, a, 1.0 - 2.0 * a], wa),
        ([a, 1.0 - 2.0 * a, a], wa),
        ([1.0 - 2.0 * a, a, a], wa),
        ([b, b, 1.0 - 2.0 * b], wb),
        ([b, 1.0 - 2.0 * b, b], wb),
        ([1.0 - 2.0 * b, b, b], wb),
    ]
}
