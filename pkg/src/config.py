"""Configuration settings for the denormalization cost simulator"""

import os
from dotenv import load_dotenv

load_dotenv()

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

# Use case settings
FIXTURE_PATH = os.path.join(PROJECT_ROOT, "data", "tpcc_use_case.yaml")
DEFAULT_CONFIG_PATH = os.getenv("DENORM_CONFIG", FIXTURE_PATH)
OUTPUT_DIR = os.getenv("DENORM_OUTPUT_DIR", "output")

# Logging
LOGS_DIR = os.getenv("DENORM_LOGS_DIR", os.path.join(PROJECT_ROOT, "logs"))
LOG_LEVEL = os.getenv("DENORM_LOG_LEVEL", "INFO")

# Sizing
# Cloud constants are quoted per decimal GB
BYTES_PER_GB = 10**9

# Workload defaults
DEFAULT_MESSAGE_SIZE = 512
DEFAULT_SHARD_LOOKUP_SIZE = 1024
INDEX_POINTER_SIZE = 8

# Covered-row search: exact set cover up to this many candidate rows, greedy above
EXACT_COVER_LIMIT = 8

# Execution
SWEEP_WORKERS = int(os.getenv("DENORM_WORKERS", "1"))

# Cost constants (single small cloud VM, one day)
RAM_SPEED = 1.25  # GB/s
SSD_SPEED = 0.325  # GB/s
COM_SPEED = 1.0  # GB/s
RAM_CARBON = 0.0280  # kg CO2e / GB
SSD_CARBON = 0.0031  # kg CO2e / GB
COM_CARBON = 0.0110  # kg CO2e / GB
EXT_TRANSFER_FEE = 0.019  # EUR / GB
SERVER_CARBON_PER_DAY = 0.87671  # kg CO2e
SERVER_FEE_PER_DAY = 0.8543  # EUR
