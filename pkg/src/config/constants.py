# src/config/constants.py

# ============================================================================
# CONSTANTES NUMÉRICAS
# ============================================================================

# SVD de Jacobi de un lado
JACOBI_MAX_SWEEPS = 100
JACOBI_TOL = 1e-12
SVD_MAX_DIM = 4096

# Normalización min-max: rango menor que esto se considera degenerado
MM_DEGENERATE_GAP = 1e-12

# Tolerancias de verificación
ORACLE_REL_TOL = 1e-9
ORACLE_REL_FLOOR = 1e-6
FD_REL_TOL = 1e-4
FD_DEFAULT_STEP = 1e-5
FD_MIN_STEP = 1e-7
FD_MAX_STEP = 1e-3
KINK_MARGIN = 1e-3
KINK_MAX_RESAMPLES = 100
BOUND_REL_TOL = 1e-9
CONSTRAINT_TOL = 1e-10

# Límites del oráculo de sumas cerradas (coste O(L³))
ORACLE_MAX_NEURONS = 8
ORACLE_MAX_STEPS = 10

# ============================================================================
# FORMATO DE CHECKPOINT
# ============================================================================

CHECKPOINT_MAGIC = b"DURNN-CKPT"
CHECKPOINT_VERSION = 1

# ============================================================================
# FORMATO IDX
# ============================================================================

IDX_IMAGES_MAGIC = 2051
IDX_LABELS_MAGIC = 2049
GZIP_MAGIC = b"\x1f\x8b"

# ============================================================================
# CÓDIGOS DE SALIDA
# ============================================================================

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
