"""Verification of ontology-level temporal properties over relational artifact systems."""
