# src/config/settings.py

import os
from pathlib import Path
from typing import Dict, List

from dotenv import load_dotenv

# Cargar variables de entorno desde .env (si existe)
load_dotenv()

# ============================================================================
# RUTAS
# ============================================================================

PROJECT_ROOT = Path(__file__).resolve().parents[2]
CONFIGS_DIR = PROJECT_ROOT / "configs"
RUNS_DIR = PROJECT_ROOT / "runs"

# Directorio de datos MNIST (se puede sobrescribir con DURNN_DATA_DIR)
DATA_DIR_ENV = "DURNN_DATA_DIR"
DEFAULT_DATA_DIR = os.getenv(DATA_DIR_ENV, str(PROJECT_ROOT / "data"))

# Nombres oficiales de los ficheros IDX (se aceptan también con .gz)
MNIST_FILES: Dict[str, str] = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}

# ============================================================================
# CONFIGURACIÓN DE ENTRENAMIENTO
# ============================================================================

DEFAULT_TASK = "adding"
DEFAULT_SEQ_LEN = 100
DEFAULT_NEURONS = 128          # Neuronas por subcapa recurrente
DEFAULT_BATCH_SIZE = 50        # Problema de la suma
DEFAULT_MNIST_BATCH_SIZE = 32  # MNIST secuencial / permutado
DEFAULT_MAX_ITERS = 20000
DEFAULT_EVAL_INTERVAL = 100
DEFAULT_EVAL_SIZE = 1000       # Secuencias del lote fijo de evaluación
EVAL_CHUNK = 500               # Secuencias por pasada al evaluar
DEFAULT_SEED = 1
DEFAULT_WORKERS = 1            # 1 = modo reproducible (un solo hilo)

# Tasa de aprendizaje
DEFAULT_LR = 2e-4
DEFAULT_LR_DECAY = 0.1
DEFAULT_LR_EVERY = 20000       # Iteraciones entre decaimientos (modo fijo)
DEFAULT_LR_PATIENCE = 5        # Evaluaciones sin mejora (modo plateau)

# Adam (valores estándar)
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# Checkpoints
DEFAULT_CHECKPOINT_EVERY = 1000

# Cada cuántas iteraciones se vuelve a medir σ_max(W_rec) con una SVD propia
SIGMA_CHECK_EVERY = 100

# ============================================================================
# CONFIGURACIÓN DE RESTRICCIONES
# ============================================================================

DEFAULT_EPSILON = 0.5          # Cota inferior de ∏U a lo largo de L pasos
DEFAULT_GAMMA = 2.0            # Cota superior de ∏U a lo largo de L pasos
DEFAULT_DELTA_BASE = 0.5       # δ = DEFAULT_DELTA_BASE ** (1/L)
EASE_LOWER_BOUND = True        # ε relajado a 0 fuera de la última capa
TRAIN_B_S = True               # False = modo estricto (b_s congelado)

# Inicialización
INIT_B_THRE = 0.1
INIT_U_LOW = 0.9
INIT_U_HIGH = 1.0
ADDING_TARGET_MEAN = 1.0       # Sesgo inicial del cabezal de regresión

# ============================================================================
# CONFIGURACIÓN MNIST
# ============================================================================

MNIST_SEQ_LEN = 784
MNIST_CLASSES = 10
MNIST_VALIDATION = 5000        # Últimas imágenes de entrenamiento
MNIST_SCALE = 1.0 / 255.0

# ============================================================================
# CONFIGURACIÓN DE VERIFICACIÓN
# ============================================================================

VERIFY_INSTANCES = 100         # Instancias aleatorias por variante
VERIFY_FD_INSTANCES = 25
VERIFY_BOUND_LENGTHS: List[int] = [50, 200, 1000]
VERIFY_BOUND_INITS = 100

# ============================================================================
# CONFIGURACIÓN DE LOGGING
# ============================================================================

# Nivel de logging (se puede sobrescribir con DURNN_LOG_LEVEL)
LOG_LEVEL = os.getenv("DURNN_LOG_LEVEL", "INFO")  # DEBUG, INFO, WARNING, ERROR

# Formato del log
LOG_FORMAT = (
    "{time:YYYY-MM-DD HH:mm:ss} - {extra[component]} - {level} - {message}"
)

# Columnas del CSV de métricas
METRIC_COLUMNS = ["iter", "loss", "lr", "wall_ms"]
TRACE_COLUMNS = ["layer", "sublayer", "t", "neuron", "activation"]
