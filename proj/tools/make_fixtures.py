#!/usr/bin/env python3
"""Generate the bundled 512x256 equirectangular fixtures and head traces.

Outputs (committed under fixtures/):
  landscape.png  procedural sky, ridges and textured ground
  city.png       skyline with facades and windows
  photo.png      a natural photograph resized to 2:1
  traces.csv     synthetic head motion, 200 ms sampling
"""

import argparse
import csv
import math
from pathlib import Path

import numpy as np
from PIL import Image

W, H = 512, 256


def smooth_noise(rng, shape, scale):
    """Band-limited noise: coarse grid upsampled bicubically, wrapped horizontally."""
    gh = max(2, shape[0] // scale + 2)
    gw = max(2, shape[1] // scale)
    coarse = rng.standard_normal((gh, gw)).astype(np.float32)
    coarse = np.concatenate([coarse, coarse[:, :1]], axis=1)
    img = Image.fromarray(coarse, mode="F").resize((shape[1] + shape[1] // gw, shape[0]), Image.BICUBIC)
    return np.asarray(img)[:, : shape[1]]


def landscape(rng):
    y = np.arange(H, dtype=np.float32)[:, None]
    x = np.arange(W, dtype=np.float32)[None, :]
    sky = 200 - 70 * (y / H) + 6 * smooth_noise(rng, (H, W), 32)
    phase = 2 * math.pi * x / W
    ridge = 120 + 14 * np.sin(3 * phase) + 9 * np.sin(7 * phase + 1.3) + 4 * smooth_noise(rng, (1, W), 16)[0]
    img = np.where(y < ridge, sky, 0)
    rock = 95 + 25 * smooth_noise(rng, (H, W), 8) + 10 * smooth_noise(rng, (H, W), 3)
    img = np.where((y >= ridge) & (y < ridge + 40), rock, img)
    ground = 70 + 0.25 * (y - 160) + 18 * smooth_noise(rng, (H, W), 6) + 8 * np.sin(y / 2.5)
    img = np.where(y >= ridge + 40, ground, img)
    return img


def city(rng):
    y = np.arange(H, dtype=np.float32)[:, None]
    img = np.broadcast_to(185 - 60 * (y / H), (H, W)).copy()
    img += 4 * smooth_noise(rng, (H, W), 24)
    x0 = 0
    while x0 < W:
        bw = int(rng.integers(18, 48))
        top = int(rng.integers(70, 150))
        shade = float(rng.integers(50, 140))
        x1 = min(W, x0 + bw)
        img[top:, x0:x1] = shade + 6 * smooth_noise(rng, (H - top, x1 - x0 + 2), 8)[:, : x1 - x0]
        for wy in range(top + 6, H - 30, 10):
            for wx in range(x0 + 3, x1 - 4, 7):
                lit = rng.random() < 0.45
                img[wy : wy + 5, wx : wx + 4] = shade + (70 if lit else -25)
        x0 = x1
    img[H - 30 :, :] = 60 + 10 * smooth_noise(rng, (30, W), 4)
    img[H - 18 : H - 16, :] = 200
    return img


def photo(rng):
    try:
        from skimage import data

        src = data.astronaut()
    except Exception:  # scikit-image missing or without data files
        return landscape(rng)[::-1] * 0.8 + 30
    gray = np.asarray(Image.fromarray(src).convert("L").resize((W, H), Image.LANCZOS), dtype=np.float32)
    # Cross-fade the seam so the horizontal wrap is continuous.
    band = 24
    t = np.linspace(0, 1, band, dtype=np.float32)[None, :]
    gray[:, W - band :] = (1 - t) * gray[:, W - band :] + t * gray[:, :1]
    return gray


def save(img, path):
    Image.fromarray(np.clip(np.rint(img), 0, 255).astype(np.uint8), mode="L").save(path)


def traces(rng, users, requests):
    rows = []
    for user in range(users):
        lon = rng.uniform(-math.pi, math.pi)
        lat = rng.uniform(-0.2, 0.2)
        vel = rng.normal(0, 0.15)
        for k in range(requests):
            rows.append((user, 200 * k, (lon + math.pi) % (2 * math.pi) - math.pi, lat))
            vel = 0.7 * vel + rng.normal(0, 0.12)
            lon += vel
            lat = float(np.clip(lat + rng.normal(0, 0.05), -0.6, 0.6))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "fixtures")
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--users", type=int, default=5)
    ap.add_argument("--requests", type=int, default=15)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    save(landscape(rng), args.out / "landscape.png")
    save(city(rng), args.out / "city.png")
    save(photo(rng), args.out / "photo.png")
    with open(args.out / "traces.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["user_id", "t_ms", "longitude_rad", "latitude_rad"])
        for user, t, lon, lat in traces(rng, args.users, args.requests):
            w.writerow([user, t, f"{lon:.6f}", f"{lat:.6f}"])


if __name__ == "__main__":
    main()
