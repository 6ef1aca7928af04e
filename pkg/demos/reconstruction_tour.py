"""Walk through fitting a basis and reconstructing images with it.

Builds a small synthetic ultrasound-like dataset, fits principal
components, then shows how the reconstruction residual falls as more
components are kept. Writes nothing outside demo_out/.
"""

from pathlib import Path

import numpy as np

from pcaharmony import pca
from pcaharmony.images import save_image

OUT = Path("demo_out/reconstruction")


def synthetic_stack(n=40, side=32, seed=3):
    """Speckled squares with a bright inclusion at a random spot."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:side, 0:side]
    images = np.empty((n, side * side))
    for i in range(n):
        cy, cx = rng.integers(side // 4, 3 * side // 4, size=2)
        blob = (yy - cy) ** 2 + (xx - cx) ** 2 <= (side // 6) ** 2
        frame = rng.uniform(0.1, 0.4, size=(side, side))
        frame[blob] = rng.uniform(0.7, 0.95)
        images[i] = frame.ravel()
    return images, side


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    X, side = synthetic_stack()
    model = pca.fit_pca(X)
    print(f"fit {model.n_samples} images of {model.d} pixels, k_max = {model.k_max}")

    cum = pca.cumulative_explained_variance(model.eigenvalues)
    print(f"first component carries {cum[0]:.1%} of the variance")
    print(f"{pca.kaiser_guttman(model.eigenvalues)} components pass the eigenvalue floor")

    print("\n  k   residual   variance kept")
    for k in (1, 2, 5, 10, model.k_max):
        recon = pca.reconstruct(model, k)
        residual = np.linalg.norm(recon - X) / np.linalg.norm(X)
        print(f"{k:>3}   {residual:8.2e}   {cum[k - 1]:.4f}")

    # export a side-by-side of the first image at increasing fidelity
    for k in (1, 5, model.k_max):
        frame = pca.reconstruct(model, k, clip=True)[0].reshape(side, side)
        save_image(OUT / f"image0_k{k}.png", frame)
    save_image(OUT / "image0_input.png", X[0].reshape(side, side))
    pca.write_scree_csv(OUT / "scree.csv", model.eigenvalues)
    print(f"\nwrote reconstructions and scree.csv under {OUT}")


if __name__ == "__main__":
    main()
