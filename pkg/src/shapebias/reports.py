"""Figure rendering for the CLI report path (one PNG per experiment)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_shape_histogram(values, estimate, path, density=None, template=None) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(values, bins=200, density=True, color="0.7", label="registered samples")
    if density is not None:
        grid = np.linspace(min(values), max(values), 800)
        ax.plot(grid, density(grid), "k-", lw=1.2, label="induced density")
    if template is not None:
        ax.axvline(template, color="g", lw=1.5, label="template")
    ax.axvline(estimate, color="r", lw=1.5, label="estimate")
    ax.set_xlabel("shape coordinate")
    ax.set_ylabel("density")
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_bias_curve(sigmas, biases, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(sigmas, biases, "o-", color="tab:red")
    ax.set_xlabel(r"noise level $\sigma$")
    ax.set_ylabel("asymptotic bias")
    ax.axhline(0.0, color="0.6", lw=0.8)
    _save(fig, path)


def plot_correction_trace(bias_norms, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(len(bias_norms)), bias_norms, "o-", color="tab:blue")
    ax.set_xlabel("bootstrap iteration")
    ax.set_ylabel("measured bias norm")
    ax.set_yscale("log")
    _save(fig, path)


def plot_kmeans(sigmas, criteria, path, accuracies=None) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(sigmas, criteria, "o-", color="tab:purple", label="separation D")
    ax.set_xlabel(r"noise level $\sigma$")
    ax.set_ylabel("separation criterion D")
    if accuracies is not None:
        ax2 = ax.twinx()
        ax2.semilogx(sigmas, accuracies, "s--", color="tab:green", label="accuracy")
        ax2.set_ylabel("assignment accuracy")
    _save(fig, path)


def plot_protein(sigmas, biases, probabilities, path) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.plot(sigmas, biases, "o-", color="tab:orange")
    ax1.set_xlabel(r"coordinate error $\sigma$ ($\AA$)")
    ax1.set_ylabel(r"$R_g^2$ bias ($\AA^2$)")
    ax2.semilogy(sigmas, probabilities, "o-", color="tab:blue")
    ax2.set_xlabel(r"coordinate error $\sigma$ ($\AA$)")
    ax2.set_ylabel("false-positive probability")
    _save(fig, path)


def plot_curvature(sigmas, analytic, empirical, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(sigmas, empirical, "o", color="tab:blue", label="empirical")
    ax.plot(sigmas, analytic, "k--", label="analytic")
    ax.set_xlabel(r"probe noise $\sigma$")
    ax.set_ylabel("orbit mean curvature")
    ax.legend(fontsize=8)
    _save(fig, path)
