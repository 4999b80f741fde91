"""High-precision reference values frozen into the Rust test-suite.

Run with `python3 reference_values.py`; requires mpmath. Every value is
computed from definitions (erfc integrals, direct convolution) at 40 digits,
independently of the Rust implementation.
"""
import mpmath as mp

mp.mp.dps = 40


def faddeeva(z):
    z = mp.mpc(z)
    return mp.exp(-z * z) * mp.erfc(-1j * z)


def psi0(x, t, x0, v):
    s = 1 + 1j * mp.mpf(t) / 2
    return (2 * mp.pi) ** mp.mpf(-0.25) * s ** mp.mpf(-0.5) * mp.exp(
        -((x - x0 - v * t) ** 2) / (4 * s) + 1j * v * (x - x0) - 1j * v * v * mp.mpf(t) / 2
    )


def eps_of(kappa):
    return mp.mpf(kappa) / (2 * mp.sqrt(2)) * mp.exp(-1j * mp.pi / 4)


def fdot(s, eps):
    f = mp.exp(eps * eps * s) * mp.erfc(eps * mp.sqrt(s))
    return eps * eps * f - eps / mp.sqrt(mp.pi * s)


def phi(t, kappa, x0, v, a=0):
    eps = eps_of(kappa)
    # s = u^2 removes the endpoint singularity
    integ = mp.quad(
        lambda u: 2 * u * fdot(u * u, eps) * psi0(a, t - u * u, x0, v),
        mp.linspace(0, mp.sqrt(t), 9),
    )
    return mp.sqrt(kappa) * (psi0(a, t, x0, v) + integ)


def show(name, z):
    z = mp.mpc(z)
    print(f"{name}: ({mp.nstr(z.real, 20)}, {mp.nstr(z.imag, 20)})")


if __name__ == "__main__":
    for z in [0, 1j, 1 + 1j, 0.3 + 0.2j, 2.5 + 0.3j, 4.5 + 0.05j, 6 + 0.01j,
              10 + 10j, 25 + 1j, 0.5 - 0.3j, -3 + 2j, 29j, 2 + 2j, 3.2 + 3.2j, 7.5]:
        show(f"w({z})", faddeeva(z))
    show("f(eps(kappa=2), t=1)", mp.exp(eps_of(2) ** 2) * mp.erfc(eps_of(2)))
    for (t, kappa, x0, v) in [(4, 1, -8, 2), (2, 0.5, -8, 2), (6, 2, -8, 2), (1, 1.3216, 0, 0), (10, 1.3216, 0, 0)]:
        show(f"phi(t={t}, kappa={kappa}, x0={x0}, v={v})", phi(t, kappa, x0, v))
