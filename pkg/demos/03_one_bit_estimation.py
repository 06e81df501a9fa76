"""Channel estimation with 1-bit receivers.

Sweeps SNR for the least-squares baseline with and without the sign
quantizer. Unquantized NMSE keeps falling with SNR; the 1-bit curve
flattens because the quantizer discards amplitude.
"""

from caviarkit.experiments import estimation_experiment

grid = (-10, -5, 0, 5, 10, 15, 20, 30)
one_bit = estimation_experiment("EASY", n_trials=500, seed=0, snr_grid=grid)
ideal = estimation_experiment("EASY", n_trials=500, seed=0, snr_grid=grid, quantized=False)

print(f"{'SNR (dB)':>8}  {'1-bit NMSE (dB)':>16}  {'unquantized (dB)':>17}")
for q, u in zip(one_bit, ideal):
    print(f"{q.snr_db:8.1f}  {q.nmse_db:16.2f}  {u.nmse_db:17.2f}")
