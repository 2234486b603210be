"""Acceptance criteria, one test per criterion; each records a PASS/FAIL line."""

import dataclasses

import numpy as np
import pytest

from vqsemcom import bitquant, chanest, codec, grid, importance, phy, pipeline
from vqsemcom.pipeline import SchemeConfig, SimConfig

pytestmark = pytest.mark.acceptance

SCHEME_NAMES = list(pipeline.SCHEMES)


@pytest.fixture
def verdict(request):
    def record(num, ok, detail):
        line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.acceptance_lines.append(line)
        print(line)
        assert ok, line
    return record


def scheme_cfg(name, base=None):
    base = base or SimConfig()
    return dataclasses.replace(base, scheme=SchemeConfig(*pipeline.SCHEMES[name]))


def mean_metric(cfg, image, cb, snr_db, seeds, attr):
    return float(np.mean([getattr(pipeline.run_once(cfg, image, snr_db, s, cb), attr) for s in seeds]))


def test_01_ls_error_law(verdict):
    cfg = SimConfig()
    per_frame = len(range(0, cfg.grid.n_t, cfg.grid.dt)) * len(range(0, cfg.grid.n_f, cfg.grid.df))
    frames = -(-100_000 // per_frame)
    worst, parts = 0.0, []
    for sigma2 in (0.01, 0.1, 1.0):
        snr_db = -10 * np.log10(sigma2)
        mse = np.mean([pipeline.probe_channel_estimation(cfg, snr_db, s).pilot for s in range(frames)])
        rel = abs(mse - sigma2) / sigma2  # unit-power pilots
        worst = max(worst, rel)
        parts.append(f"s2={sigma2:g}: {mse:.5f}")
    verdict(1, worst < 0.03, f"LS pilot MSE over {frames * per_frame} pilots [{'; '.join(parts)}], "
                             f"worst rel err {worst:.4f} (tol 0.03)")


def test_02_perfect_correction(verdict):
    rng = np.random.default_rng(2)
    n_books, per_book = 200, 50
    hits_in = failures_out = 0
    for _ in range(n_books):
        J = int(rng.integers(2, 65))
        D = int(rng.integers(1, 17))
        cb = codec.Codebook(rng.normal(scale=rng.uniform(0.1, 50), size=(J, D)))
        e = cb.entries
        for _ in range(per_book):
            i = int(rng.integers(J))
            d = np.linalg.norm(e - e[i], axis=1)
            d[i] = np.inf
            radius = d.min() / 2
            # half the perturbations head straight for the nearest neighbour, the rest are isotropic
            if rng.random() < 0.5:
                u = e[int(np.argmin(d))] - e[i]
            else:
                u = rng.normal(size=D)
            u /= np.linalg.norm(u)
            inside = (e[i] + 0.99 * radius * u)[:, None, None]
            outside = (e[i] + 1.01 * radius * u)[:, None, None]
            hits_in += np.array_equal(codec.rematch(inside, cb)[:, 0, 0], e[i])
            failures_out += not np.array_equal(codec.rematch(outside, cb)[:, 0, 0], e[i])
    total = n_books * per_book
    verdict(2, hits_in == total and failures_out >= 1,
            f"{hits_in}/{total} recovered at 0.99 d_min/2, {failures_out} failures at 1.01 d_min/2")


def test_03_gradient_finite_differences(verdict):
    rng = np.random.default_rng(3)
    step, worst = 1e-5, 0.0
    for _ in range(20):
        size = int(rng.choice([8, 12, 16]))
        z = rng.uniform(0, 255, (size, size))
        z_e = codec.dct_encode(z, 4)
        K = z_e + rng.normal(scale=rng.uniform(0.5, 20), size=z_e.shape)
        g = importance.feature_gradients(z_e, K, z.size)
        fd = np.zeros_like(K)
        for idx in np.ndindex(K.shape):
            kp, km = K.copy(), K.copy()
            kp[idx] += step
            km[idx] -= step
            lp = importance.reconstruction_loss(z, codec.dct_decode(kp, 4, clamp=False))
            lm = importance.reconstruction_loss(z, codec.dct_decode(km, 4, clamp=False))
            fd[idx] = (lp - lm) / (2 * step)
        worst = max(worst, np.linalg.norm(g - fd) / np.linalg.norm(fd))
    verdict(3, worst < 1e-6, f"worst relative gradient error {worst:.2e} over 20 instances (tol 1e-6)")


def test_04_interpolation_locality(verdict):
    cfg = SimConfig()
    cfg.chan.rho = 0.99
    stats = [pipeline.probe_channel_estimation(cfg, 10.0, s) for s in range(100)]
    imp = float(np.mean([s.important for s in stats]))
    reg = float(np.mean([s.regular for s in stats]))
    pil = float(np.mean([s.pilot for s in stats]))
    verdict(4, imp <= reg, f"10 dB, rho=0.99, 100 seeds: MSE pilot {pil:.4f}, "
                           f"important {imp:.4f}, regular {reg:.4f} (need important <= regular)")


def test_05_snr_monotonicity(verdict, full_codebook, test_image):
    snrs = [5.0, 10.0, 15.0, 20.0, 25.0]
    worst_drop, table = 0.0, []
    for name in SCHEME_NAMES:
        cfg = scheme_cfg(name)
        curve = [mean_metric(cfg, test_image, full_codebook, s, range(20), "psnr_db") for s in snrs]
        worst_drop = max(worst_drop, max(a - b for a, b in zip(curve, curve[1:])))
        table.append(f"{name}: " + "/".join(f"{p:.2f}" for p in curve))
    verdict(5, worst_drop <= 0.2, f"mean PSNR at 5..25 dB [{'; '.join(table)}], "
                                  f"largest drop {max(worst_drop, 0.0):.3f} dB (tol 0.2)")


def test_06_fit_benefit(verdict, full_codebook, test_image):
    ok, parts = True, []
    for snr in (5.0, 10.0):
        on = mean_metric(scheme_cfg("proposed+fit"), test_image, full_codebook, snr, range(50), "ssim")
        off = mean_metric(scheme_cfg("proposed"), test_image, full_codebook, snr, range(50), "ssim")
        ok &= on >= off
        parts.append(f"{snr:g} dB: fit {on:.4f} vs no-fit {off:.4f}")
    verdict(6, ok, "mean SSIM over 50 paired seeds, " + "; ".join(parts))


def test_07_rematch_benefit(verdict, full_codebook, test_image):
    ok, parts = True, []
    for snr in (5.0, 10.0, 15.0):
        on = mean_metric(scheme_cfg("proposed+fit"), test_image, full_codebook, snr, range(50), "ssim")
        off = mean_metric(scheme_cfg("vq+fit"), test_image, full_codebook, snr, range(50), "ssim")
        ok &= on >= off
        parts.append(f"{snr:g} dB: rematch {on:.4f} vs none {off:.4f}")
    verdict(7, ok, "mean SSIM over 50 paired seeds, " + "; ".join(parts))


def test_08_structural_counts(verdict):
    lay = SimConfig.from_profile("paper").layout()
    n_t, n_f, dt, df = lay.n_t, lay.n_f, lay.dt, lay.df
    pilots = {(t, f) for t in range(n_t) for f in range(n_f) if t % dt == 0 and f % df == 0}
    greens = set()
    for t, f in pilots:
        for nt, nf in ((t - 1, f), (t + 1, f), (t, f - 1), (t, f + 1)):
            if 0 <= nt < n_t and 0 <= nf < n_f and (nt, nf) not in pilots:
                greens.add((nt, nf))
    n_cpi = n_t * n_f
    d_imp = 16 * len(greens) // (n_cpi - len(pilots))
    enumerated = (n_cpi, len(pilots), len(greens), d_imp)
    reported = (lay.n_cpi, lay.n_ref, lay.n_green, grid.important_feature_count(lay, 16))
    ok = enumerated == reported and enumerated[:2] == (354816, 14784) and d_imp == 2
    verdict(8, ok, f"N_CPI={reported[0]} N_ref={reported[1]} N_green={reported[2]} D_imp={reported[3]} "
                   f"(enumeration {enumerated})")


def test_09_bit_exact_plumbing(verdict, tmp_path):
    rng = np.random.default_rng(9)
    n = 100
    lay = SimConfig().layout()
    counts = dict.fromkeys(("map/demap", "bitquant", "qam", "ofdm", "codebook file"), 0)
    for k in range(n):
        c = int(rng.integers(1, 17))
        D, H, W = int(rng.integers(2, 17)), int(rng.integers(1, 9)), int(rng.integers(1, 9))
        lo = float(rng.uniform(-100, 0))
        vr = (lo, lo + float(rng.uniform(1, 200)))

        # quantize -> bits -> dequantize -> quantize reproduces the bits
        K = rng.uniform(vr[0] - 5, vr[1] + 5, (D, H, W))
        p = bitquant.quantize_features(K, c, vr)
        again = bitquant.quantize_features(bitquant.dequantize_features(p), c, vr)
        counts["bitquant"] += np.array_equal(p.words, again.words)

        # grid mapping with a random ranking
        w = importance.ImportanceWeights(np.zeros(D), rng.permutation(D))
        frames = grid.map_payload(lay, p, w)
        counts["map/demap"] += np.array_equal(grid.demap_payload(frames, lay, w).words, p.words)

        bits = rng.integers(0, 2, int(rng.integers(1, 5000)), dtype=np.uint8)
        sym, pad = phy.qam16_modulate(bits)
        counts["qam"] += np.array_equal(phy.qam16_demodulate(sym, pad), bits)

        fft = int(rng.choice([64, 128, 256]))
        n_f = int(rng.integers(1, fft + 1))
        cp = int(rng.integers(0, 33))
        frame = rng.normal(size=(int(rng.integers(1, 9)), n_f)) + 1j * rng.normal(size=(1, n_f))
        back = phy.ofdm_demodulate(phy.ofdm_modulate(frame, fft, cp), fft, cp, n_f)
        counts["ofdm"] += bool(np.allclose(back, frame, rtol=0, atol=1e-12))

        cb = codec.Codebook(rng.normal(scale=100, size=(int(rng.integers(2, 65)), D)))
        path = tmp_path / f"cb{k}.vqcb"
        codec.save_codebook(cb, path)
        loaded = codec.load_codebook(path)
        counts["codebook file"] += (loaded.entries.tobytes() == cb.entries.tobytes()
                                    and loaded.value_range == cb.value_range)
    ok = all(v == n for v in counts.values())
    verdict(9, ok, ", ".join(f"{k} {v}/{n}" for k, v in counts.items()))


def test_10_feature_shape(verdict, test_image):
    assert test_image.shape == (128, 128)
    shape = codec.dct_encode(test_image, 4).shape
    verdict(10, shape == (16, 32, 32), f"128x128 input -> feature tensor {shape}")
