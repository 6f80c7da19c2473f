"""
Main entry point: command-line interface, and the FastAPI app served by `serve`
"""

import sys

from dotenv import load_dotenv
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from src.api.cli import main as cli_main
from src.api.routes import pipeline, router
from src.utils.startup import initialize_system

# Load environment variables
load_dotenv()

# Create FastAPI app
app = FastAPI(
    title="Magnetic Tunneling Service",
    description="Tunneling splitting between boundary curvature wells under a strong magnetic field",
    version="1.0.0"
)

# Add CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Include API routes
app.include_router(router, prefix="/api/v1")


@app.on_event("startup")
async def startup_event():
    """Warm the constants cache on startup"""
    await initialize_system(pipeline)


if __name__ == "__main__":
    sys.exit(cli_main())
