"""
PipeScan HTTP API
Main application entry point
"""

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from app.routes import health, inversion
from app.config import settings
from app.logging_config import configure_logging

configure_logging(settings.log_level, settings.log_json)

# Initialize FastAPI app
app = FastAPI(
    title="PipeScan API",
    description="Pipe direction and radius estimation from GPR B-scan signatures",
    version="1.0.0",
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Include routers
app.include_router(health.router, prefix="/api", tags=["health"])
app.include_router(inversion.router, prefix="/api", tags=["inversion"])


@app.get("/")
async def root():
    """Root endpoint with basic API information"""
    return {
        "message": "PipeScan API",
        "version": "1.0.0",
        "docs": "/docs",
        "health": "/api/health",
    }
