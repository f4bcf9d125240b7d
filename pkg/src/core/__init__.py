"""
Core utilities: error hierarchy and seed derivation.
"""
