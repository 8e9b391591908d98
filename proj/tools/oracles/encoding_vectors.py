#!/usr/bin/env python3
"""Independent oracle for the canonical encoding.

Writes docs/encoding-vectors.json: credential field maps and signed
transactions with their exact bytes, digests and Ed25519 signatures. The C++
unit suite and the web client's suite both assert every vector.
"""

import hashlib
import json
import pathlib
import sys

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat


def u32(n):
    return n.to_bytes(4, "big")


def encode(fields):
    """fields: dict name -> bytes. Sorted by UTF-8 name bytes."""
    out = b""
    for name in sorted(fields, key=lambda k: k.encode("utf-8")):
        n = name.encode("utf-8")
        v = fields[name]
        out += u32(len(n)) + n + u32(len(v)) + v
    return out


def text(v):
    if isinstance(v, bool):
        raise ValueError("booleans are not encodable")
    if isinstance(v, int):
        return str(v).encode()
    return v.encode("utf-8")


def op_fields(op):
    return {k: text(v) for k, v in op.items()}


def tx_signing(sender_hex, nonce, op, timestamp):
    return encode({
        "sender": sender_hex.encode(),
        "nonce": text(nonce),
        "op": encode(op_fields(op)),
        "timestamp": text(timestamp),
    })


CREDENTIALS = [
    ("transcript-two-courses", {
        "credentialType": "Transcript", "studentId": "S00042", "name": "Ann Lee", "period": "2023-Fall",
        "issuer": "U1", "course.C1.score": "91", "course.C1.letter": "A", "course.C1.title": "Algebra",
        "course.C2.score": "67", "course.C2.letter": "D", "course.C2.title": "Biology"}),
    ("diploma-utf8-name", {
        "credentialType": "Diploma", "studentId": "S7", "name": "Zoë Ñúñez 李", "period": "2024-Spring",
        "issuer": "U2", "program": "CS"}),
    ("integer-and-empty-values", {
        "credentialType": "Transcript", "studentId": "S1", "name": "", "period": "2023-Summer", "issuer": "U1",
        "course.SUM1.score": 100, "course.SUM1.letter": "A", "course.SUM1.title": ""}),
    ("name-order-edges", {
        "credentialType": "Transcript", "studentId": "S2", "name": "Bo", "period": "2023-Fall", "issuer": "U1",
        "course.C1.score": "5", "course.C10.score": "6", "course.C1.title": "x", "courseX": "y", "Z": "upper"}),
]

TRANSACTIONS = [
    ("upsert-grade", "11" * 32, 0, 1700000000000,
     {"kind": "UpsertGrade", "studentId": "S1", "courseId": "C1", "term": "2023-Fall", "score": 91, "letter": "A"}),
    ("register-student", "22" * 32, 7, 1700000000123,
     {"kind": "RegisterStudent", "studentId": "S00042", "name": "Zoë", "program": "EE"}),
    ("update-profile", "33" * 32, 3, 42,
     {"kind": "UpdateProfile", "studentId": "S1", "field": "email", "value": "ann@example.edu"}),
    ("attach-file", "44" * 32, 12, 1700000009999,
     {"kind": "AttachFile", "studentId": "S1", "courseId": "C1",
      "cid": hashlib.sha256(b"lab report").hexdigest(), "size": 10, "mediaLabel": "report.pdf"}),
    ("register-account", "55" * 32, 1, 5,
     {"kind": "RegisterAccount", "accountKey": Ed25519PrivateKey.from_private_bytes(bytes.fromhex("66" * 32))
      .public_key().public_bytes(Encoding.Raw, PublicFormat.Raw).hex(), "role": "Staff", "subjectId": "T1",
      "displayName": "Dr. Kim"}),
]


def main():
    out_path = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else \
        pathlib.Path(__file__).resolve().parents[2] / "docs" / "encoding-vectors.json"
    creds = []
    for name, fields in CREDENTIALS:
        enc = encode({k: text(v) for k, v in fields.items()})
        creds.append({"name": name, "fields": fields, "encodingHex": enc.hex(),
                      "sha256": hashlib.sha256(enc).hexdigest()})
    txs = []
    for name, seed, nonce, ts, op in TRANSACTIONS:
        sk = Ed25519PrivateKey.from_private_bytes(bytes.fromhex(seed))
        pk = sk.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
        sender = hashlib.sha256(pk).hexdigest()
        signing = tx_signing(sender, nonce, op, ts)
        sig = sk.sign(signing)
        full = encode({"sender": sender.encode(), "nonce": text(nonce), "op": encode(op_fields(op)),
                       "timestamp": text(ts), "signature": sig.hex().encode()})
        body = {k: v for k, v in op.items() if k != "kind"}
        body.update({"nonce": nonce, "timestamp": ts, "signature": sig.hex()})
        txs.append({"name": name, "seed": seed, "publicKey": pk.hex(), "sender": sender, "kind": op["kind"],
                    "nonce": nonce, "timestamp": ts, "writeBody": body, "signingBytesHex": signing.hex(),
                    "signature": sig.hex(), "encodingHex": full.hex(),
                    "txHash": hashlib.sha256(full).hexdigest()})
    doc = {"format": "educhain canonical encoding vectors", "version": 1, "credentials": creds,
           "transactions": txs}
    out_path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
