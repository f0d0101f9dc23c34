"""Voice-of-the-customer toolkit.

Builds tag-conditioned fine-tuning datasets from customer-need/verbatim
pairs, runs batch extraction against an HTTP LLM backend, estimates how
completely an extraction stream covers a final customer-need set, and
hosts blind human-evaluation studies with majority-vote aggregation.
"""

__version__ = "0.1.0"
