"""
Interacting Particle System Inequality Lab
"""

__version__ = "1.0.0"
__description__ = "Exact verification of functional inequalities for finite interacting particle systems"
