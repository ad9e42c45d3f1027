from pathlib import Path
from typing import Optional

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables
load_dotenv()

BACKEND_DIR = Path(__file__).resolve().parent.parent


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="ignore")

    # Environment
    ENVIRONMENT: str = "development"
    LOG_LEVEL: Optional[str] = None
    LOG_FORMAT: str = "json"

    # Model endpoint defaults (overridden by the run config)
    DEFAULT_ENDPOINT: str = "https://generativelanguage.googleapis.com/v1beta"
    DEFAULT_PROVIDER: str = "gemini"
    DEFAULT_MODEL_ID: str = "gemini-2.5-pro"
    DEFAULT_API_KEY_ENV: str = "CASCADEQA_API_KEY"
    HTTP_TIMEOUT_SECONDS: float = 60.0

    # Assets
    PROMPTS_DIR: Path = BACKEND_DIR / "prompts"
    ABBREVIATIONS_PATH: Path = BACKEND_DIR / "text_service" / "data" / "abbreviations.txt"

    PROJECT_NAME: str = "cascadeqa"

    @property
    def effective_log_level(self) -> str:
        if self.LOG_LEVEL:
            return self.LOG_LEVEL.upper()
        return "DEBUG" if self.ENVIRONMENT == "development" else "INFO"


# Create settings instance
settings = Settings()
