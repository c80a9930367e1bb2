"""JVM class-file and JAR ingestion.

Parses class files just deeply enough for call-graph construction:
hierarchy facts (super, interfaces, flags) and every invocation
instruction with its kind and declared target. Everything else
(fields, stack maps, annotations, signatures) is skipped.
"""

from __future__ import annotations

import logging
import struct
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, List, Optional, Tuple, Union

from .model import CallKind, MethodRef, OPCODE_TO_KIND

log = logging.getLogger(__name__)

# Newest class-file major version the parser has been exercised against.
# Newer files are parsed best-effort and flagged, not rejected; the invoke
# opcodes have been stable since the format's inception.
LATEST_TESTED_MAJOR = 68  # Java 24


class NotAClassFile(ValueError):
    pass


class TruncatedClassFile(ValueError):
    pass


class MalformedConstantPool(ValueError):
    pass


class NotAZip(ValueError):
    pass


@dataclass(frozen=True)
class CallSite:
    """One invocation instruction inside a method body."""

    pc: int
    kind: CallKind
    declared_target: Optional[MethodRef]

    def __post_init__(self):
        if self.kind is not CallKind.DYNAMIC and self.declared_target is None:
            raise ValueError("non-dynamic call site requires a declared target")


@dataclass(frozen=True)
class MethodSummary:
    name: str
    descriptor: str
    is_static: bool
    is_abstract: bool
    is_private: bool
    is_final: bool
    call_sites: Tuple[CallSite, ...]


@dataclass(frozen=True)
class ClassSummary:
    name: str
    super_name: Optional[str]
    interfaces: Tuple[str, ...]
    is_interface: bool
    is_abstract: bool
    is_final: bool
    methods: Tuple[MethodSummary, ...]
    major_version: int


# access flags
_ACC_PRIVATE = 0x0002
_ACC_STATIC = 0x0008
_ACC_FINAL = 0x0010
_ACC_INTERFACE = 0x0200
_ACC_ABSTRACT = 0x0400

# constant-pool tags
_TAG_UTF8 = 1
_TAG_INTEGER = 3
_TAG_FLOAT = 4
_TAG_LONG = 5
_TAG_DOUBLE = 6
_TAG_CLASS = 7
_TAG_STRING = 8
_TAG_FIELDREF = 9
_TAG_METHODREF = 10
_TAG_IMETHODREF = 11
_TAG_NAME_AND_TYPE = 12
_TAG_METHOD_HANDLE = 15
_TAG_METHOD_TYPE = 16
_TAG_DYNAMIC = 17
_TAG_INVOKE_DYNAMIC = 18
_TAG_MODULE = 19
_TAG_PACKAGE = 20


class _Reader:
    """Big-endian cursor over the class-file bytes."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedClassFile(
                "need %d bytes at offset %d, have %d"
                % (n, self.pos, len(self.data) - self.pos)
            )
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u1(self) -> int:
        return self._take(1)[0]

    def u2(self) -> int:
        return struct.unpack(">H", self._take(2))[0]

    def u4(self) -> int:
        return struct.unpack(">I", self._take(4))[0]

    def bytes(self, n: int) -> bytes:
        return self._take(n)

    def skip(self, n: int) -> None:
        self._take(n)


def _decode_mutf8(raw: bytes) -> str:
    # modified UTF-8: embedded NULs are encoded as 0xC0 0x80, supplementary
    # characters as surrogate pairs; surrogatepass covers the latter
    return raw.replace(b"\xc0\x80", b"\x00").decode("utf-8", "surrogatepass")


class _ConstantPool:
    def __init__(self, entries):
        self._entries = entries  # index -> (tag, payload) or None for gaps

    def _entry(self, index: int, expect_tags) -> tuple:
        if index < 1 or index >= len(self._entries):
            raise MalformedConstantPool("constant index %d out of range" % index)
        entry = self._entries[index]
        if entry is None:
            raise MalformedConstantPool(
                "constant index %d points into a long/double second slot" % index
            )
        tag, payload = entry
        if tag not in expect_tags:
            raise MalformedConstantPool(
                "constant %d has tag %d, expected one of %s"
                % (index, tag, sorted(expect_tags))
            )
        return tag, payload

    def utf8(self, index: int) -> str:
        return self._entry(index, {_TAG_UTF8})[1]

    def class_name(self, index: int) -> str:
        name_index = self._entry(index, {_TAG_CLASS})[1]
        return self.utf8(name_index)

    def method_ref(self, index: int) -> MethodRef:
        _, (class_index, nat_index) = self._entry(
            index, {_TAG_METHODREF, _TAG_IMETHODREF}
        )
        owner = self.class_name(class_index)
        name_index, desc_index = self._entry(nat_index, {_TAG_NAME_AND_TYPE})[1]
        try:
            return MethodRef(owner, self.utf8(name_index), self.utf8(desc_index))
        except ValueError as exc:
            raise MalformedConstantPool(str(exc)) from exc

    def check_invoke_dynamic(self, index: int) -> None:
        self._entry(index, {_TAG_INVOKE_DYNAMIC})


def _parse_constant_pool(r: _Reader) -> _ConstantPool:
    count = r.u2()
    entries: List[Optional[tuple]] = [None] * max(count, 1)
    index = 1
    while index < count:
        tag = r.u1()
        if tag == _TAG_UTF8:
            entries[index] = (tag, _decode_mutf8(r.bytes(r.u2())))
        elif tag in (_TAG_INTEGER, _TAG_FLOAT):
            entries[index] = (tag, r.bytes(4))
        elif tag in (_TAG_LONG, _TAG_DOUBLE):
            entries[index] = (tag, r.bytes(8))
            index += 1  # long/double occupy two slots
        elif tag in (_TAG_CLASS, _TAG_STRING, _TAG_METHOD_TYPE,
                     _TAG_MODULE, _TAG_PACKAGE):
            entries[index] = (tag, r.u2())
        elif tag in (_TAG_FIELDREF, _TAG_METHODREF, _TAG_IMETHODREF,
                     _TAG_NAME_AND_TYPE, _TAG_DYNAMIC, _TAG_INVOKE_DYNAMIC):
            entries[index] = (tag, (r.u2(), r.u2()))
        elif tag == _TAG_METHOD_HANDLE:
            entries[index] = (tag, (r.u1(), r.u2()))
        else:
            raise MalformedConstantPool(
                "unknown constant tag %d at index %d" % (tag, index)
            )
        index += 1
    return _ConstantPool(entries)


# Total instruction lengths (opcode included) for every fixed-length opcode.
# tableswitch (0xAA), lookupswitch (0xAB) and wide (0xC4) are variable.
_OPCODE_LENGTHS = {}
for _op in range(0x00, 0x10):  # nop, aconst_null, iconst_*, lconst_*, fconst_*, dconst_*
    _OPCODE_LENGTHS[_op] = 1
_OPCODE_LENGTHS.update({0x10: 2, 0x11: 3, 0x12: 2, 0x13: 3, 0x14: 3})  # push/ldc
for _op in range(0x15, 0x1A):  # iload..aload (indexed)
    _OPCODE_LENGTHS[_op] = 2
for _op in range(0x1A, 0x36):  # *load_<n>, *aload
    _OPCODE_LENGTHS[_op] = 1
for _op in range(0x36, 0x3B):  # istore..astore (indexed)
    _OPCODE_LENGTHS[_op] = 2
for _op in range(0x3B, 0x84):  # *store_<n>, *astore, stack ops, arithmetic
    _OPCODE_LENGTHS[_op] = 1
_OPCODE_LENGTHS[0x84] = 3  # iinc
for _op in range(0x85, 0x99):  # conversions, comparisons
    _OPCODE_LENGTHS[_op] = 1
for _op in range(0x99, 0xA9):  # if*, goto, jsr
    _OPCODE_LENGTHS[_op] = 3
_OPCODE_LENGTHS[0xA9] = 2  # ret
for _op in range(0xAC, 0xB2):  # ireturn..return
    _OPCODE_LENGTHS[_op] = 1
for _op in range(0xB2, 0xB6):  # getstatic..putfield
    _OPCODE_LENGTHS[_op] = 3
_OPCODE_LENGTHS.update({
    0xB6: 3, 0xB7: 3, 0xB8: 3,  # invokevirtual/special/static
    0xB9: 5, 0xBA: 5,           # invokeinterface, invokedynamic
    0xBB: 3,                    # new
    0xBC: 2,                    # newarray
    0xBD: 3,                    # anewarray
    0xBE: 1, 0xBF: 1,           # arraylength, athrow
    0xC0: 3, 0xC1: 3,           # checkcast, instanceof
    0xC2: 1, 0xC3: 1,           # monitorenter, monitorexit
    0xC5: 4,                    # multianewarray
    0xC6: 3, 0xC7: 3,           # ifnull, ifnonnull
    0xC8: 5, 0xC9: 5,           # goto_w, jsr_w
    0xFE: 1, 0xFF: 1,           # impdep1, impdep2
})


def instruction_length(code: bytes, pc: int) -> int:
    """Length of the instruction starting at ``pc``, honoring switch
    padding and the wide prefix."""
    op = code[pc]
    if op == 0xAA:  # tableswitch
        pad = (4 - (pc + 1) % 4) % 4
        base = pc + 1 + pad
        low, high = struct.unpack(">ii", code[base + 4:base + 12])
        return 1 + pad + 12 + (high - low + 1) * 4
    if op == 0xAB:  # lookupswitch
        pad = (4 - (pc + 1) % 4) % 4
        base = pc + 1 + pad
        (npairs,) = struct.unpack(">i", code[base + 4:base + 8])
        return 1 + pad + 8 + npairs * 8
    if op == 0xC4:  # wide
        return 6 if code[pc + 1] == 0x84 else 4
    try:
        return _OPCODE_LENGTHS[op]
    except KeyError:
        raise TruncatedClassFile("unknown opcode 0x%02X at pc %d" % (op, pc))


def _extract_call_sites(code: bytes, cp: _ConstantPool) -> Tuple[CallSite, ...]:
    sites = []
    pc = 0
    while pc < len(code):
        op = code[pc]
        if op in OPCODE_TO_KIND:
            kind = OPCODE_TO_KIND[op]
            index = struct.unpack(">H", code[pc + 1:pc + 3])[0]
            if kind is CallKind.DYNAMIC:
                cp.check_invoke_dynamic(index)
                sites.append(CallSite(pc, kind, None))
            else:
                sites.append(CallSite(pc, kind, cp.method_ref(index)))
        length = instruction_length(code, pc)
        if length <= 0 or pc + length > len(code):
            raise TruncatedClassFile(
                "instruction at pc %d overruns the code array" % pc
            )
        pc += length
    return tuple(sites)


def _parse_method(r: _Reader, cp: _ConstantPool) -> MethodSummary:
    access = r.u2()
    name = cp.utf8(r.u2())
    descriptor = cp.utf8(r.u2())
    call_sites: Tuple[CallSite, ...] = ()
    for _ in range(r.u2()):
        attr_name = cp.utf8(r.u2())
        attr_len = r.u4()
        if attr_name == "Code":
            end = r.pos + attr_len
            r.skip(4)  # max_stack, max_locals
            code = r.bytes(r.u4())
            call_sites = _extract_call_sites(code, cp)
            r.skip(end - r.pos)  # exception table + code attributes
        else:
            r.skip(attr_len)
    return MethodSummary(
        name=name,
        descriptor=descriptor,
        is_static=bool(access & _ACC_STATIC),
        is_abstract=bool(access & _ACC_ABSTRACT),
        is_private=bool(access & _ACC_PRIVATE),
        is_final=bool(access & _ACC_FINAL),
        call_sites=call_sites,
    )


def parse_class(data: bytes) -> ClassSummary:
    """Parse class-file bytes into a ClassSummary.

    Raises NotAClassFile, TruncatedClassFile or MalformedConstantPool.
    """
    r = _Reader(data)
    if len(data) < 4 or r.u4() != 0xCAFEBABE:
        raise NotAClassFile("bad magic")
    r.u2()  # minor
    major = r.u2()
    if major > LATEST_TESTED_MAJOR:
        log.warning(
            "class-file major version %d is newer than tested (%d); "
            "parsing best-effort", major, LATEST_TESTED_MAJOR,
        )
    cp = _parse_constant_pool(r)
    access = r.u2()
    name = cp.class_name(r.u2())
    super_index = r.u2()
    super_name = cp.class_name(super_index) if super_index != 0 else None
    interfaces = tuple(cp.class_name(r.u2()) for _ in range(r.u2()))
    for _ in range(r.u2()):  # fields
        r.skip(6)
        for _ in range(r.u2()):
            r.skip(2)
            r.skip(r.u4())
    methods = []
    seen = set()
    for _ in range(r.u2()):
        method = _parse_method(r, cp)
        key = (method.name, method.descriptor)
        if key in seen:
            raise MalformedConstantPool(
                "duplicate method %s%s in %s" % (method.name, method.descriptor, name)
            )
        seen.add(key)
        methods.append(method)
    return ClassSummary(
        name=name,
        super_name=super_name,
        interfaces=interfaces,
        is_interface=bool(access & _ACC_INTERFACE),
        is_abstract=bool(access & _ACC_ABSTRACT),
        is_final=bool(access & _ACC_FINAL),
        methods=tuple(methods),
        major_version=major,
    )


@dataclass(frozen=True)
class SkipDiagnostic:
    entry_path: str
    reason: str


def _skippable(path: str) -> bool:
    if not path.endswith(".class"):
        return True
    if path == "module-info.class" or path.endswith("/module-info.class"):
        return True
    # META-INF includes multi-release versioned classes; base classes win
    return path.startswith("META-INF/")


def read_jar(
    src: Union[bytes, str, Path, BinaryIO],
) -> Tuple[List[Tuple[str, ClassSummary]], List[SkipDiagnostic]]:
    """Read every class entry of a JAR, central-directory order.

    Per-entry parse failures are collected as diagnostics, not raised.
    Returns (entries, diagnostics).
    """
    import io

    if isinstance(src, bytes):
        src = io.BytesIO(src)
    try:
        archive = zipfile.ZipFile(src)
    except zipfile.BadZipFile as exc:
        raise NotAZip(str(exc)) from exc
    entries: List[Tuple[str, ClassSummary]] = []
    diagnostics: List[SkipDiagnostic] = []
    with archive:
        for info in archive.infolist():  # central-directory order
            path = info.filename
            if _skippable(path):
                continue
            try:
                data = archive.read(info)
                summary = parse_class(data)
            except Exception as exc:
                diagnostics.append(SkipDiagnostic(path, "%s: %s" % (
                    type(exc).__name__, exc)))
                log.warning("skipping %s: %s", path, exc)
                continue
            entries.append((path, summary))
    return entries, diagnostics
