"""Blend sensing and communication figures of merit with one weight.

Run:  python3 demos/unified_metric_sweep.py
"""

import numpy as np

from isaclab import metrics, scene, unified, waveform

fs = 1e6
u = waveform.generate_chirp(4e5, 2.56e-4, fs)
prior = scene.SensingPrior(np.full(64, 1e-9), (-fs / 2, fs / 2))
noise = scene.NoiseModel.white(1e-12, (-fs / 2, fs / 2))

# communication side: a binary symmetric channel with 5% crossover
eps = 0.05
W = np.array([[1 - eps, eps], [eps, 1 - eps]])
cap, p_in = metrics.channel_capacity(W)
print(f"BSC(0.05) capacity      : {cap:.6f} nats "
      f"({metrics.nats_to_bits(cap):.4f} bits), input PMF {p_in.round(3)}")

i_s = metrics.conditional_mi(u, prior, noise)
print(f"chirp conditional MI    : {i_s:.4f} nats")

score = unified.signal_metric(u, prior, noise, W, lam=0.5)
print(f"normalized sensing term : {score.normalized_sensing:.4f}")
print(f"normalized comm term    : {score.normalized_comm:.4f}")
print(f"J(u) at lambda=0.5      : {score.value:.4f}\n")

# the combined score is affine in lambda, so a sweep is a straight line
print("lambda   J(u)")
for lam, j in unified.sweep_lambda(score.normalized_sensing,
                                   score.normalized_comm,
                                   np.linspace(0.1, 0.9, 9)):
    bar = "#" * int(round(40 * j))
    print(f"  {lam:.1f}   {j:.4f}  {bar}")

print("\nMoving lambda trades the same waveform between the two services;")
print("curvature would only appear if the waveform itself were re-optimized")
print("at each lambda.")
