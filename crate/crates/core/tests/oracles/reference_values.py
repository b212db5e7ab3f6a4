"""Independent high-precision reference values frozen in tests/reference.rs.

Run with `python3 reference_values.py`. Requires mpmath.

Routes used here differ from the library on purpose:
  * steady state: damped fixed-point iteration on I -> eps^2 / (kappa^2 + D(I)^2)
    from a dense grid of seeds, then Newton refinement in 30-digit arithmetic;
  * spectra: quadrature-basis resolvent, S_y(w) = T(w) N(w) T(w)^H with
    T = sqrt(2 kappa) E (-i w - M)^-1 B - [0 I], S_opt = 2 lambda_min(Re S_y);
  * spectral peak: minimum of |det(-i w - M)|^2 near the lower resonance.
"""

import mpmath as mp

mp.mp.dps = 30

HBAR = mp.mpf("1.054571817e-34")
KB = mp.mpf("1.380649e-23")
C = mp.mpf("299792458")
TAU = 2 * mp.pi

L = mp.mpf("1e-3")
LAM = mp.mpf("810e-9")
MASS = mp.mpf("5e-12")
WM = TAU * mp.mpf("1e7")
GAMMA = TAU * mp.mpf("100")
KAPPA = TAU * mp.mpf("1e6")
DELTA = WM


def derived(power, temp, r):
    wp = TAU * C / LAM
    xzpf = mp.sqrt(HBAR / (MASS * WM))
    g1 = wp / L * xzpf
    g2 = r * g1
    eps = mp.sqrt(2 * KAPPA * power / (HBAR * wp))
    nth = mp.mpf(0) if temp == 0 else 1 / mp.expm1(HBAR * WM / (KB * temp))
    return dict(xzpf=xzpf, g1=g1, g2=g2, eps=eps, nth=nth, temp=temp)


def state(d, intensity, exact):
    g1, g2, nth = d["g1"], d["g2"], d["nth"]
    u = WM + 2 * g2 * intensity
    xs = -g1 * intensity / u
    x2 = xs**2 + (WM * (1 + 2 * nth) / u if exact else 0)
    dt = DELTA + g1 * xs + g2 * x2
    a = d["eps"] / mp.mpc(KAPPA, dt)
    return dict(I=intensity, u=u, xs=xs, x2=x2, dt=dt, G=g1 + 2 * g2 * xs, a=a,
                X=mp.sqrt(2) * a.real, P=mp.sqrt(2) * a.imag)


def fixed_points(d, exact, seeds=40, alpha=mp.mpf("0.02")):
    """Attracting fixed points with a positive effective spring constant."""
    i0 = (d["eps"] / KAPPA) ** 2
    f = lambda i: d["eps"] ** 2 / (KAPPA**2 + state(d, i, exact)["dt"] ** 2)
    found = []
    for k in range(seeds + 1):
        i = i0 * k / seeds
        for _ in range(4000):
            i = (1 - alpha) * i + alpha * f(i)
        i = mp.findroot(lambda y: y - f(y), i)
        if state(d, i, exact)["u"] <= 0:
            continue
        if all(abs(i - j) > mp.mpf("1e-20") * i0 for j in found):
            found.append(i)
    return sorted(found)


def drift(d, s):
    G = s["G"]
    return mp.matrix([
        [0, WM, 0, 0],
        [-s["u"], -GAMMA, -G * s["X"], -G * s["P"]],
        [G * s["P"], 0, -KAPPA, s["dt"]],
        [-G * s["X"], 0, -s["dt"], -KAPPA],
    ])


def kernel(d, w, markov):
    if markov:
        return GAMMA * (2 * d["nth"] + 1)
    t = d["temp"]
    if t == 0:
        return GAMMA * abs(w) / WM
    x = HBAR * w / (2 * KB * t)
    return GAMMA / WM * (2 * KB * t / HBAR) if x == 0 else GAMMA / WM * w / mp.tanh(x)


def output_psd(d, s, w, markov):
    m = drift(d, s)
    res = (-1j * w * mp.eye(4) - m) ** -1
    b = mp.matrix([[0, 0, 0], [1, 0, 0], [0, mp.sqrt(2 * KAPPA), 0], [0, 0, mp.sqrt(2 * KAPPA)]])
    t = mp.sqrt(2 * KAPPA) * (res * b)[2:4, 0:3]
    t[0, 1] -= 1
    t[1, 2] -= 1
    n = mp.diag([kernel(d, w, markov), mp.mpf("0.5"), mp.mpf("0.5")])
    return t * n * t.transpose_conj()


def s_opt(d, s, w, markov=False):
    sy = output_psd(d, s, w, markov)
    a, b, c = sy[0, 0].real, sy[0, 1].real, sy[1, 1].real
    lam = (a + c) / 2 - mp.sqrt(((a - c) / 2) ** 2 + b**2)
    # Eigenvector of the smaller eigenvalue gives (cos phi, sin phi).
    phi = mp.atan2(lam - a, b) if b != 0 else (0 if a <= c else mp.pi / 2)
    phi = phi % mp.pi
    return 2 * lam, phi


def s_phi(d, s, w, phi, markov=False):
    sy = output_psd(d, s, w, markov)
    v = mp.matrix([mp.cos(phi), mp.sin(phi)])
    return 2 * (v.T * sy.apply(lambda z: z.real) * v)[0]


def spectral_peak(d, s, near):
    m = drift(d, s)
    f = lambda w: abs(mp.det(-1j * w * mp.eye(4) - m)) ** 2
    lo, hi = near * mp.mpf("0.9"), near * mp.mpf("1.1")
    gr = (mp.sqrt(5) - 1) / 2
    for _ in range(200):
        a, b = hi - gr * (hi - lo), lo + gr * (hi - lo)
        if f(a) < f(b):
            hi = b
        else:
            lo = a
    return (lo + hi) / 2


def show(name, v):
    print(f"{name} = {mp.nstr(v, 17)}")


if __name__ == "__main__":
    d = derived(mp.mpf("1e-4"), mp.mpf("1e-3"), 0)
    show("x_zpf", d["xzpf"])
    show("g1", d["g1"])
    show("epsilon", d["eps"])
    show("n_th", d["nth"])

    for r in [mp.mpf(0), mp.mpf("-1e-2")]:
        d = derived(mp.mpf("1e-4"), mp.mpf("1e-3"), r)
        for exact in [False, True]:
            fps = fixed_points(d, exact)
            print(f"r={r} exact={exact} fixed points:", [mp.nstr(i, 17) for i in fps])
        s = state(d, fixed_points(d, True)[0], True)
        m = drift(d, s)
        print(f"r={r} drift (exact-mode lowest branch):")
        for i in range(4):
            print("   ", [mp.nstr(m[i, j], 17) for j in range(4)])
        for w in [mp.mpf("0.66") * WM, WM, mp.mpf("1.2") * WM]:
            v, phi = s_opt(d, s, w)
            show(f"  S_opt(w={mp.nstr(w / WM, 3)} wm)", v)
            show(f"  phi_opt(w={mp.nstr(w / WM, 3)} wm)", phi)
            sy = output_psd(d, s, w, True)
            show(f"  S_xx+S_pp markov (w={mp.nstr(w / WM, 3)} wm)", (sy[0, 0] + sy[1, 1]).real)
        near = mp.sqrt(WM * s["u"])
        pk = spectral_peak(d, s, near)
        show("  spectral peak / wm", pk / WM)
        v, _ = s_opt(d, s, pk)
        show("  S_opt at peak", v)
