"""Smart band security toolkit.

Subpackages:
    terms / wire / dolev_yao   message algebra, encodings, intruder deduction
    backends                   symbolic and concrete crypto backends
    protocol                   secured protocols and vulnerable baselines
    sim                        discrete-event adversarial network simulator
    verify                     bounded Dolev-Yao secrecy checker
    threatmodel                DFD parsing, STRIDE enumeration, attack trees
    cli                        command-line entry point
"""

__version__ = "0.1.0"
