"""conflictlab: an offline harness for bird's-eye traffic-conflict detection.

Synthetic intersection scenarios with a geometric conflict oracle, real-footage
ingestion, prompt-driven multimodal backends (remote or mocked), fine-tune
dataset export, metric evaluation, and a human review service.
"""

__version__ = "0.1.0"
