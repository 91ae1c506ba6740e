"""cellparse: deterministic CCG supervision from logical forms and a
discrete-bottleneck cellular automaton over type sequences."""

__version__ = "0.1.0"
