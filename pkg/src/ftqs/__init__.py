"""Desk-scale simulator and bounds engine for constant-depth fault-tolerant
graph-state sampling: Pauli/Clifford algebra, graph-state sampling, one-round
surface-code readout decoding, magic-state distillation planning and small
concrete distillation circuits, measurement-based routing, and closed-form
resource/error bounds, wired together behind the ``ftqs`` CLI.
"""

__version__ = "0.1.0"
