"""
Paquete principal de DuRNN.

Este paquete contiene la celda recurrente dual (memoria corta con valores
singulares recortados y memoria larga independiente unidas por un
mecanismo de selección), su retropropagación truncada escrita a mano,
las proyecciones de restricciones, los oráculos de verificación y los
bancos de prueba (problema de la suma, MNIST secuencial y permutado).
"""

__version__ = "1.0.0"
__author__ = "DuRNN Team"
__description__ = "Red recurrente dual con BPTT truncado manual"
