#!/usr/bin/env python3
# Copyright 2026 The Thresh Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Independent high-precision evaluation of the closed-form constants.

The values printed here are frozen into tests/params_test.cc and
tests/sim_test.cc. This script does not share code with the C++ headers.
"""
from mpmath import mp, mpf, sqrt, log, floor, exp

mp.dps = 50


def log2(x):
    return log(x, 2)


def vote_noise(n, m, T, delta, L):
    k = log(12 * m * T / delta)
    return 4 * sqrt(2 * n * k) / (L - 3 / sqrt(2) * sqrt(n * k))


def estimate_noise_bernoulli(n, T, ell, delta):
    num = sqrt(2 * log(12 * T / delta) / (2 * n))
    den = log2(T) * sqrt(log(12 * n * T / delta) / (2 * ell)) - sqrt(log(12 * T / delta) / (2 * n))
    return num / den


def estimate_noise_heavy(n, w, d, T, ell, delta):
    lw = log(16 * w * T / delta)
    num = 2 * (sqrt(lw / (n * w)) + lw * sqrt(w) / n**2)
    den = (2 * (log2(T) + 2) * sqrt(2 * log(16 * w * n * T / delta) / (w * ell))
           - 2 * sqrt(log(16 * d * T / delta) / (2 * w * n))
           - lw * sqrt(w) / n**2)
    return num / den


def thresholds_bernoulli(n, T, ell, delta):
    top = int(floor(log2(T)))
    return [2 * (b + 1) * sqrt(log(12 * n * T / delta) / (2 * ell)) for b in range(-1, top + 1)]


def thresholds_heavy(n, w, T, ell, delta):
    top = int(floor(log2(T)))
    return [2 * (b + 1) * sqrt(2 * log(16 * w * n * T / delta) / (w * ell)) for b in range(-1, top + 1)]


def bernoulli_bound(n, T, ell, delta):
    return 4 * (floor(log2(T)) + 2) * sqrt(log(12 * n * T / delta) / (2 * ell))


def heavy_bound(n, d, T, ell, delta):
    return (4 * (log2(T) + 2) * sqrt(2 * log(320 * n**2 * T / delta) / ell)
            + sqrt(log(16 * n * d * T / delta) / n))


def assumption1_min_L(n, m, T, delta, eps):
    return (3 / sqrt(2) + sqrt(32) / eps) * sqrt(n * log(12 * m * T / delta))


def show(name, v):
    print(f"{name} = {mp.nstr(v, 20)}")


if __name__ == "__main__":
    a = vote_noise(1000, 2, 16, mpf("0.1"), 500)
    b = estimate_noise_bernoulli(1000, 16, 100, mpf("0.1"))
    show("a(n=1000,m=2,T=16,d=0.1,L=500)", a)
    show("b_bern(n=1000,T=16,l=100,d=0.1)", b)
    show("budget eps=1", min(1 / (8 * a), 1 / (4 * b)))
    show("b_heavy(n=200,w=4000,d=1000,T=8,l=500,d=0.1)",
         estimate_noise_heavy(200, 4000, 1000, 8, 500, mpf("0.1")))
    for i, t in enumerate(thresholds_bernoulli(1000, 16, 100, mpf("0.1"))):
        show(f"  T_bern[{i - 1}]", t)
    for i, t in enumerate(thresholds_heavy(200, 4000, 8, 500, mpf("0.1"))):
        show(f"  T_heavy[{i - 1}]", t)
    show("bound(n=1000,T=16,l=100,d=0.1)", bernoulli_bound(1000, 16, 100, mpf("0.1")))
    show("slack(n=100,T=10,d=1,K=10)", sqrt(log(mpf(10) * 10 / 1) / 200))
    show("assumption1 minL(n=1000,m=2,T=16,d=0.1,eps=1)",
         assumption1_min_L(1000, 2, 16, mpf("0.1"), 1))
    print("-- acceptance regimes --")
    a3 = vote_noise(2000, 2, 32, mpf("0.05"), 1000)
    b3 = estimate_noise_bernoulli(2000, 32, 2000, mpf("0.05"))
    show("crit3 a", a3)
    show("crit3 b", b3)
    show("crit3 bound", bernoulli_bound(2000, 32, 2000, mpf("0.05")))
    show("crit3 minL eps=2", assumption1_min_L(2000, 2, 32, mpf("0.05"), 2))
    b2 = estimate_noise_bernoulli(2000, 32, 500, mpf("0.05"))
    show("crit2 b (l=500)", b2)
    ah = vote_noise(200, 1, 8, mpf("0.1"), 200)
    bh = estimate_noise_heavy(200, 4000, 500, 8, 1000, mpf("0.1"))
    show("crit6 a", ah)
    show("crit6 b", bh)
    show("crit6 bound", heavy_bound(200, 500, 8, 1000, mpf("0.1")))
    show("crit6 minL eps=256", assumption1_min_L(200, 1, 8, mpf("0.1"), 256))
    for i, t in enumerate(thresholds_heavy(200, 4000, 8, 1000, mpf("0.1"))):
        show(f"  crit6 T_heavy[{i - 1}]", t)
