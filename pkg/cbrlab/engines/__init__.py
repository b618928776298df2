# cbrlab/engines/__init__.py
# Scenario engines. Every module here registers itself on import.
