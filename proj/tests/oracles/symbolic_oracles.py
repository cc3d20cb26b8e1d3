"""Symbolic reference values frozen into the C++ tests.

Run:  python3 tests/oracles/symbolic_oracles.py
"""
import sympy as sp

x, y, t = sp.symbols("x y t", real=True)


def tri_integral(f, a, b, c):
    """Integral of f(x, y) over the triangle abc (affine pull-back)."""
    s, r = sp.symbols("s r", real=True)
    X = a[0] + (b[0] - a[0]) * s + (c[0] - a[0]) * r
    Y = a[1] + (b[1] - a[1]) * s + (c[1] - a[1]) * r
    jac = sp.Abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    g = sp.expand(f.subs({x: X, y: Y}, simultaneous=True) * jac)
    return sp.simplify(sp.integrate(sp.integrate(g, (r, 0, 1 - s)), (s, 0, 1)))


def seg_integral(f, a, b):
    X = a[0] + (b[0] - a[0]) * t
    Y = a[1] + (b[1] - a[1]) * t
    L = sp.sqrt((b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2)
    return sp.simplify(sp.integrate(sp.expand(f.subs({x: X, y: Y}, simultaneous=True)) * L, (t, 0, 1)))


def p2_interpolant(f, a, b, c):
    """Quadratic polynomial matching f at the vertices and edge midpoints of abc."""
    cs = sp.symbols("c0:6")
    basis = [1, x, y, x * x, x * y, y * y]
    poly = sum(ci * bi for ci, bi in zip(cs, basis))
    mid = lambda p, q: (R(p[0] + q[0]) / 2, R(p[1] + q[1]) / 2)
    nodes = [a, b, c, mid(b, c), mid(c, a), mid(a, b)]
    eqs = [sp.Eq(poly.subs({x: n[0], y: n[1]}), f.subs({x: n[0], y: n[1]})) for n in nodes]
    sol = sp.solve(eqs, cs, dict=True)[0]
    return sp.expand(poly.subs(sol))


R = sp.Rational
ref = [(0, 0), (1, 0), (0, 1)]

print("# quadrature")
print("x^2 y^2 over reference triangle:", tri_integral(x**2 * y**2, *ref))
print("x^4 over reference triangle:    ", tri_integral(x**4, *ref))
print("t^4 over [0,1]:", sp.integrate(t**4, (t, 0, 1)), " t^5:", sp.integrate(t**5, (t, 0, 1)))

print("# P1 mass on the reference triangle")
l = [1 - x - y, x, y]
print("diag:", tri_integral(l[0] * l[0], *ref), " off:", tri_integral(l[0] * l[1], *ref))

print("# single-cell estimator, u = (x^2, 0), p = 0, lambda = 1, h_T = sqrt(2)")
h2 = 2
vol = h2 * tri_integral((x**2 + 2) ** 2, *ref)
div_trace = sum(seg_integral((2 * x) ** 2, p, q) for p, q in [(ref[1], ref[2]), (ref[2], ref[0]), (ref[0], ref[1])])
div = sp.sqrt(2) * div_trace
print("vol =", vol, "=", sp.N(vol, 20))
print("div =", sp.nsimplify(div), "=", sp.N(div, 20))
print("eta^2 =", sp.N(vol + div, 20))

print("# a(Iu, Iu) on the 4-cell criss-cross square, u = (x(1-x)y(1-y), 0)")
u = x * (1 - x) * y * (1 - y)
cells = [((0, 0), (1, 0), (R(1, 2), R(1, 2))), ((1, 0), (1, 1), (R(1, 2), R(1, 2))),
         ((1, 1), (0, 1), (R(1, 2), R(1, 2))), ((0, 1), (0, 0), (R(1, 2), R(1, 2)))]
total = 0
for cell in cells:
    iu = p2_interpolant(u, *cell)
    total += tri_integral(sp.diff(iu, x) ** 2 + sp.diff(iu, y) ** 2, *cell)
print("a(Iu,Iu) on T0 =", sp.nsimplify(total), "=", sp.N(total, 20))
print("exact a(u,u) =", sp.integrate(sp.integrate(sp.diff(u, x)**2 + sp.diff(u, y)**2, (x, 0, 1)), (y, 0, 1)))
