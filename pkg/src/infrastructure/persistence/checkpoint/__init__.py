"""
Almacenamiento binario de checkpoints.
"""
