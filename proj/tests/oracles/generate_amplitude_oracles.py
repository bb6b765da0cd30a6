#!/usr/bin/env python3
"""Regenerates tests/amplitude_oracles.hpp.

Amplitudes are obtained by inverting 1/(s + i d + 2 b e^{i pi/4} sqrt(s)) on
a Hankel contour: residues of the poles on the principal sheet plus the
branch-cut integral, evaluated with mpmath quadrature at 30 digits. No
special functions of the closed form are involved.

    python3 tests/oracles/generate_amplitude_oracles.py > tests/amplitude_oracles.hpp
"""
import mpmath as mp

mp.mp.dps = 30


def hankel(b, d, T):
    b, d, T = mp.mpf(b), mp.mpf(d), mp.mpf(T)
    k = 2 * b * mp.exp(1j * mp.pi / 4)
    fp = lambda x: 1 / (-x + 1j * d + 1j * k * mp.sqrt(x))
    fm = lambda x: 1 / (-x + 1j * d - 1j * k * mp.sqrt(x))
    nodes = [0, 0.25, 1, 4, 16, mp.inf]
    u = mp.quad(lambda x: (fm(x) - fp(x)) * mp.exp(-x * T), nodes) / (2j * mp.pi)
    du = mp.quad(lambda x: -x * (fm(x) - fp(x)) * mp.exp(-x * T), nodes) / (2j * mp.pi)
    q = mp.sqrt(mp.mpc(b * b - d))
    for y in (mp.exp(1j * mp.pi / 4) * (-b + q), mp.exp(1j * mp.pi / 4) * (-b - q)):
        if mp.re(y) > 1e-20:
            r = 2 * y / (2 * y + k) * mp.exp(y * y * T)
            u += r
            du += y * y * r
    return u, du


def c(v):
    return "{%s, %s}" % (mp.nstr(mp.re(v), 20), mp.nstr(mp.im(v), 20))


# (b, d): pole-free cut for every entry; d = 1 with b = 1 is the double root.
params = [(1, -10), (1, -1), (1, 0.5), (1, 1), (1, 5), (0.6, -0.7)]
times = [0.5, 2, 7]

print("#pragma once")
print("// Generated by tests/oracles/generate_amplitude_oracles.py (mpmath). Do not edit.")
print("#include <array>")
print("#include <complex>")
print("namespace oracle {")
print("struct AmplitudeCase { double b; double delta; double T; std::complex<double> U; std::complex<double> dU; };")
print("inline const std::array<AmplitudeCase, %d> kAmplitude{{" % (len(params) * len(times)))
for b, d in params:
    for T in times:
        u, du = hankel(b, d, T)
        print("    {%s, %s, %s, %s, %s}," % (b, d, T, c(u), c(du)))
print("}};")
print("}  // namespace oracle")
