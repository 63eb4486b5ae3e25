"""In-path trust enforcement for OPC UA secure-channel establishment.

The compiled core exposes the wire codec, the certificate extraction
pipeline, the thumbprint allow-list and the ledger primitives.
"""

from trustgate._core import *  # noqa: F401,F403
from trustgate._core import (
    POLICY_AES128_SHA256_RSAOAEP,
    POLICY_AES256_SHA256_RSAPSS,
    POLICY_BASIC256SHA256,
    POLICY_NONE,
    Registry,
    Tangle,
    ThumbprintTable,
    decode_message_header,
    decode_opn,
    encode_opn,
    extract_certificate,
    generate_signing_key,
    hash_thumbprint,
    make_self_signed,
    process_opn,
    swap_length_bytes,
)

__all__ = [
    "POLICY_AES128_SHA256_RSAOAEP",
    "POLICY_AES256_SHA256_RSAPSS",
    "POLICY_BASIC256SHA256",
    "POLICY_NONE",
    "Registry",
    "Tangle",
    "ThumbprintTable",
    "decode_message_header",
    "decode_opn",
    "encode_opn",
    "extract_certificate",
    "generate_signing_key",
    "hash_thumbprint",
    "make_self_signed",
    "process_opn",
    "swap_length_bytes",
]
