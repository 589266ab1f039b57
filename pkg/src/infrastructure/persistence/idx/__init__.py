"""
Lectura de ficheros IDX de MNIST.
"""
