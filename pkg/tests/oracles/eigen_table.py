"""Symbolic verification of the low-order eigenpolynomial table.

Checks, with a kept symbolic throughout:

* each table entry solves the backward weighted heat equation
      dt P + Lap_x P + P_yy + (a/y) P_y = 0,
* parabolic homogeneity  Z P = 2 kappa P  with  Z = 2t dt + x dx + y dy,
* the general separated families
      t^k H_n(x/sqrt t) L_{(a-1)/2, m}(y^2/4t)          (Neumann)
      t^k y^{1-a} H_n(x/sqrt t) L_{(1-a)/2, m}(y^2/4t)  (Dirichlet)
  solve the equation with k = n/2 + m resp. n/2 + m + (1-a)/2,
* the energy identity  i = d + (t - t0) int W F dmu  for polynomial W
  (moments of the backward Gaussian measure evaluated in closed form),
* instant energies of the benchmark fixtures.

Run:  python3 tests/oracles/eigen_table.py
"""

import sympy as sp

a, x, y, t = sp.symbols("a x y t", real=True)


def weighted_backward(P):
    """dt P + P_xx + P_yy + (a/y) P_y, simplified."""
    return sp.simplify(
        sp.diff(P, t) + sp.diff(P, x, 2) + sp.diff(P, y, 2) + a / y * sp.diff(P, y)
    )


def euler_op(P):
    return sp.expand(2 * t * sp.diff(P, t) + x * sp.diff(P, x) + y * sp.diff(P, y))


def hermite(n, z):
    hs = [sp.Integer(1), z]
    while len(hs) <= n:
        k = len(hs) - 1
        hs.append(sp.expand(z * hs[k] - 2 * k * hs[k - 1]))
    return hs[n]


def kummer(beta, m, r):
    out = sp.Integer(0)
    for j in range(m + 1):
        out += sp.rf(-m, j) / (sp.rf(beta + 1, j) * sp.factorial(j)) * r**j
    return out


TABLE = [
    ("(0,0)", sp.Integer(1), 0),
    ("(1,0)", x, sp.Rational(1, 2)),
    ("(2,0)", x**2 - 2 * t, 1),
    ("(0,1)", (1 + a) * t / 2 - y**2 / 4, 1),
    ("(3,0)", x**3 - 6 * x * t, sp.Rational(3, 2)),
    ("(1,1)", x * ((1 + a) * t / 2 - y**2 / 4), sp.Rational(3, 2)),
    ("(4,0)", x**4 - 12 * x**2 * t + 12 * t**2, 2),
    ("(2,1)", (x**2 - 2 * t) * ((1 + a) * t / 2 - y**2 / 4), 2),
    ("(0,2)", ((1 + a) * (3 + a) * t**2 - (3 + a) * y**2 * t + y**4 / 4) / 8, 2),
]


def check_table():
    print("== nine-entry table: backward equation + homogeneity ==")
    for name, P, kappa in TABLE:
        eq = weighted_backward(P)
        hom = sp.simplify(euler_op(P) - 2 * kappa * P)
        print(f"  {name}: kappa = {kappa}, equation residual = {eq}, "
              f"Z P - 2kP = {hom}")


def check_families():
    print("== separated families (symbolic n <= 4, m <= 2) ==")
    for n in range(5):
        for m in range(3):
            kap = sp.Rational(n, 2) + m
            P = t**kap * hermite(n, x / sp.sqrt(t)) * kummer(
                (a - 1) / 2, m, y**2 / (4 * t)
            )
            res = sp.simplify(weighted_backward(sp.expand(P)))
            print(f"  neumann n={n} m={m}: kappa={kap}, residual={res}")
    for n in range(3):
        for m in range(2):
            kap = sp.Rational(n, 2) + m + (1 - a) / 2
            # t^kap V(X/sqrt t) with V = y^{1-a} H_n(x) L(y^2/4):
            # the (1-a)/2 part of kap is carried by (y/sqrt t)^{1-a}.
            P = (
                t ** (sp.Rational(n, 2) + m)
                * y ** (1 - a)
                * hermite(n, x / sp.sqrt(t))
                * kummer((1 - a) / 2, m, y**2 / (4 * t))
            )
            res = sp.simplify(weighted_backward(P))
            hom = sp.simplify(euler_op(P) - 2 * kap * P)
            print(f"  dirichlet n={n} m={m}: kappa={kap}, residual={res}, "
                  f"ZP-2kP={hom}")


# -- moment bookkeeping for the energy identity ------------------------------
# Under dmu_t (unit mass):  E[x^(2i)] = (2i-1)!! (2t)^i,
#                           E[y^(2j)] = (4t)^j ((1+a)/2)_j,  independent.

def measure_moment(i, j):
    dd = sp.Integer(1)
    for val in range(1, 2 * i, 2):
        dd *= val
    return dd * (2 * t) ** i * (4 * t) ** j * sp.rf((1 + a) / 2, j)


def integrate_poly(P):
    """int P dmu_t for P polynomial in (x, y, t), even in y."""
    P = sp.expand(P)
    out = sp.Integer(0)
    for term in sp.Add.make_args(P):
        c = term
        ix = sp.degree(term, x) if term.has(x) else 0
        iy = sp.degree(term, y) if term.has(y) else 0
        if ix % 2 == 1:
            continue  # odd x moment vanishes
        if iy % 2 == 1:
            raise ValueError("odd power of y")
        c = term / (x**ix * y**iy)
        out += c * measure_moment(ix // 2, iy // 2)
    return sp.simplify(out)


def energy_identity(W):
    """i - d - t * int W F dmu  with F := dt W + Lap W + (a/y) dy W, q = 0."""
    F = sp.expand(sp.diff(W, t) + sp.diff(W, x, 2) + sp.diff(W, y, 2))
    # (a/y) dy W is polynomial for W even in y
    F = sp.expand(F + sp.cancel(a / y * sp.diff(W, y)))
    grad2 = sp.diff(W, x) ** 2 + sp.diff(W, y) ** 2
    d = t * integrate_poly(grad2)
    i = sp.Rational(1, 2) * integrate_poly(W * euler_op(W))
    rhs = d + t * integrate_poly(W * F)
    return sp.simplify(i - rhs)


def check_energy_identity():
    print("== energy identity i = d + t int W F dmu (q=0, p0=0) ==")
    samples = [
        x**2 - 2 * t,
        x**2 + 2 * t,                       # caloric for the unweighted op, F != 0
        x**4 + y**2 * x**2 + t * x**2,
        (1 + a) * t / 2 - y**2 / 4,
        y**4 - t * y**2 + 3 * t**2 + x**3,  # odd x part exercises parity handling
    ]
    for W in samples:
        print(f"  W = {W}:  residual = {energy_identity(W)}")


def check_fixture_energies():
    print("== instant energies ==")
    for W, kappa in [(x, sp.Rational(1, 2)), (x**2 - 2 * t, 1)]:
        h = integrate_poly(W * W)
        grad2 = sp.diff(W, x) ** 2 + sp.diff(W, y) ** 2
        d0 = t * integrate_poly(grad2)
        i = sp.Rational(1, 2) * integrate_poly(W * euler_op(W))
        print(f"  W={W}: h={h}, d0={d0}, i={i}, N0 = {sp.simplify(d0 / h)}")
    # extension of trace 2t: W = 2t - y^2/(1+a) = 4/(1+a) * table entry (0,1)
    W = 2 * t - y**2 / (1 + a)
    res = weighted_backward(W)
    h = sp.simplify(integrate_poly(W * W))
    print(f"  W=2t-y^2/(1+a): backward residual = {res}, h = {h}")
    print(f"    h at a=0: {sp.simplify(h.subs(a, 0))}  (t^2 coefficient)")


if __name__ == "__main__":
    check_table()
    check_families()
    check_energy_identity()
    check_fixture_energies()
