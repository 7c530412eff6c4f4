"""Desk-scale adversarial robustness toolkit.

Attacks (FGSM, Step-LL, iterative l-inf, DeepFool, C&W l2) against small
numpy MLPs, adversarial training, transferability matrices and a CVSS v3.0
base-score calculator for rating the resulting ML vulnerabilities.
"""

__version__ = "0.1.0"
