import os

import numpy as np
import pytest

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")

BENCHMARK_CSV = os.path.join(DATA_DIR, "coco_benchmark.csv")

# Published multi-object benchmark: combined ranking scores per method.
BENCHMARK_RS = {
    "GAN-CLS": 7.0,
    "StackGAN": 11.5,
    "AttnGAN": 29.0,
    "DM-GAN": 41.0,
    "CPGAN": 43.0,
    "DF-GAN": 31.5,
    "AttnGAN + CL": 37.0,
    "DM-GAN + CL": 51.5,
    "DALLE-mini": 23.5,
    "AttnGAN++": 56.0,
    "Real Images": 65.0,
}

# Published per-aspect scores for the same table (Image Realism, Text
# Relevance, Object Accuracy, Object Fidelity, Counting, Positional).
BENCHMARK_ASPECTS = {
    "GAN-CLS": (1.0, 2.0, 1.0, 1.0, 1.0, 1.0),
    "StackGAN": (2.5, 1.0, 2.0, 2.0, 2.0, 2.0),
    "AttnGAN": (5.0, 5.0, 5.5, 4.5, 6.0, 3.0),
    "DM-GAN": (6.5, 7.0, 7.0, 7.5, 8.0, 5.0),
    "CPGAN": (7.5, 8.0, 10.0, 7.5, 4.0, 6.0),
    "DF-GAN": (7.0, 3.0, 4.0, 8.5, 5.0, 4.0),
    "AttnGAN + CL": (6.5, 6.0, 5.5, 5.0, 7.0, 7.0),
    "DM-GAN + CL": (8.5, 9.0, 8.0, 7.0, 9.0, 10.0),
    "DALLE-mini": (2.5, 4.0, 3.0, 3.0, 3.0, 8.0),
    "AttnGAN++": (9.0, 10.0, 9.0, 9.0, 10.0, 9.0),
    "Real Images": (10.0, 11.0, 11.0, 11.0, 11.0, 11.0),
}

ASPECT_ORDER = ("Image Realism", "Text Relevance", "Object Accuracy",
                "Object Fidelity", "Counting Alignment", "Positional Alignment")

# Re-ranking over the five human-study methods plus real images.
HUMAN_STUDY_RS = {
    "StackGAN": 6.00,
    "AttnGAN": 13.5,
    "DM-GAN": 20.0,
    "CPGAN": 23.0,
    "AttnGAN++": 28.5,
    "Real Images": 35.0,
}


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_prob_matrix(rng, rows, cols):
    raw = rng.gamma(1.0, 1.0, size=(rows, cols))
    return raw / raw.sum(axis=1, keepdims=True)
