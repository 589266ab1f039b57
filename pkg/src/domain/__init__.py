"""
Capa del Dominio - Lógica numérica core.

Contiene el álgebra lineal, los value objects, las entidades y los
módulos de celda, gradiente, optimización, tareas y oráculos.
"""
