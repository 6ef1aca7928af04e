"""Compare the three ways of choosing how many components to keep.

The same spectrum is run through the eigenvalue-floor rule, a cumulative
variance target, and a manual override, printing what each one picks.
"""

import numpy as np

from pcaharmony import pca


def main():
    # a steep spectrum with a long noise tail, typical of image stacks
    rng = np.random.default_rng(17)
    spectrum = np.sort(np.r_[rng.uniform(5, 60, 6), rng.uniform(0.01, 0.9, 24)])[::-1]

    cum = pca.cumulative_explained_variance(spectrum)
    print("leading eigenvalues:", np.round(spectrum[:8], 2))
    print("cumulative variance:", np.round(cum[:8], 3))
    print()

    policies = [
        pca.SelectionPolicy(criterion="kaiser"),
        pca.SelectionPolicy(criterion="variance", target=0.90),
        pca.SelectionPolicy(criterion="variance", target=0.99),
        pca.SelectionPolicy(criterion="manual", k=12),
    ]
    for policy in policies:
        chosen = pca.select_components(spectrum, policy)
        label = policy.criterion
        if policy.criterion == "variance":
            label += f"@{policy.target}"
        print(f"{label:<14} -> k = {chosen.k:>2}, variance kept {chosen.achieved_variance:.4f}")

    kept = pca.select_components(spectrum).achieved_variance
    if not 0.85 <= kept <= 0.95:
        print(f"\nnote: default rule keeps {kept:.1%}, outside the usual 85-95% band")


if __name__ == "__main__":
    main()
