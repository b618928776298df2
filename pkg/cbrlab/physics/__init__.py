# cbrlab/physics/__init__.py
# Numerical library: units, CBR spectrum, Fock algebra, master equation,
# Itô unraveling, closed forms, collapse-model baseline and position grid.
