"""Client-server verification protocol."""

from .client import ServerError, client_register, client_verify
from .server import GalleryStore, RegistrationError, VerificationServer, load_gallery, serve, verify
from .wire import (
    ErrorMessage,
    ProtocolError,
    RegisterRequest,
    RegisterResponse,
    VerifyRequest,
    VerifyResponse,
)

__all__ = [
    "ErrorMessage",
    "GalleryStore",
    "ProtocolError",
    "RegisterRequest",
    "RegisterResponse",
    "RegistrationError",
    "ServerError",
    "VerificationServer",
    "VerifyRequest",
    "VerifyResponse",
    "client_register",
    "client_verify",
    "load_gallery",
    "serve",
    "verify",
]
