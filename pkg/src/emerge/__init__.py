"""Desk-scale simulator of symbol emergence as collective inference.

Agents with private mixture-model perception negotiate shared signs through
the Metropolis-Hastings naming game; the decentralized protocol is checked
against exact enumeration and a centralized Gibbs sampler on the same
coupled model. Signs can be exchanged plainly, as noisy phoneme strings
(double articulation), or as note motifs (n-gram melodies).
"""

__version__ = "0.1.0"
