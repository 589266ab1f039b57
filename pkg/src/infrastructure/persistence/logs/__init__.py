"""
Escritura de métricas y trazas en CSV.
"""
