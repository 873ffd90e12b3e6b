#!/usr/bin/env python3
"""Generate the bundled reference instruction catalog (data/instructions.xml).

The output follows the subset of the uops.info instructions.xml schema that
specswarm ingests: <instruction asm extension iform [cpl]> elements with
<operand type width r w [suppressed]> children, register operands listing the
legal register names as element text.

Run from the repository root:

    python3 tools/gen_catalog.py > data/instructions.xml
    python3 tools/prune_catalog.py data/instructions.xml

The second step drops forms the local GNU assembler rejects.
"""

import sys
from xml.sax.saxutils import quoteattr

XMM = ",".join(f"XMM{i}" for i in range(16))
YMM = ",".join(f"YMM{i}" for i in range(16))
ZMM = ",".join(f"ZMM{i}" for i in range(16))
GPR64 = "RAX,RCX,RDX,RBX,RSP,RBP,RSI,RDI,R8,R9,R10,R11,R12,R13,R14,R15"
GPR32 = "EAX,ECX,EDX,EBX,ESP,EBP,ESI,EDI,R8D,R9D,R10D,R11D,R12D,R13D,R14D,R15D"
MASK = ",".join(f"K{i}" for i in range(8))
MM = ",".join(f"MM{i}" for i in range(8))
ST = ",".join(f"ST({i})" for i in range(8))

VEC = {128: ("XMM", XMM, "xmm"), 256: ("YMM", YMM, "ymm"), 512: ("ZMM", ZMM, "zmm")}
MEMNAME = {8: "MEMb", 16: "MEMw", 32: "MEMd", 64: "MEMq", 128: "MEMdq", 256: "MEMqq", 512: "MEMzmm"}

entries = []


def reg(width, names, acc):
    return ("reg", width, acc, names)


def vreg(width, acc):
    return ("reg", width, acc, VEC[width][1])


def mem(width, acc):
    return ("mem", width, acc, None)


def imm8():
    return ("imm", 8, "r", None)


def flags():
    return ("flags", 0, "w", None, True)


def iform_token(op):
    kind, width = op[0], op[1]
    if kind == "reg":
        names = op[3]
        if names.startswith("XMM"):
            return "XMMdq"
        if names.startswith("YMM"):
            return "YMMqq"
        if names.startswith("ZMM"):
            return "ZMMf32"
        if names.startswith("K"):
            return "MASKmskw"
        if names.startswith("MM"):
            return "MMXq"
        if names.startswith("ST"):
            return "X87"
        if names.startswith("E"):
            return "GPR32d"
        if names.startswith("CR"):
            return "CR"
        return "GPR64q"
    if kind == "mem":
        return MEMNAME[width]
    if kind == "imm":
        return "IMMb"
    return ""


ROUNDING_MODES = ("rn-sae", "rd-sae", "ru-sae", "rz-sae")


def add(asm, ext, ops, cpl=3, suffix="", zeroing=False, rounding=False):
    visible = [o for o in ops if not is_suppressed(o)]
    tokens = [iform_token(o) for o in visible]
    iform = "_".join([asm] + tokens) + suffix
    if not rounding:
        entries.append((asm, ext, iform, ops, cpl, zeroing, None))
        return
    for rc in ROUNDING_MODES:
        entries.append((asm, ext, iform + "_" + rc.upper().replace("-", "_"), ops, cpl, zeroing, rc))


def is_suppressed(op):
    return len(op) >= 5 and op[4]


# ---------------------------------------------------------------- legacy SSE

def sse_arith(asm, ext, scalar_width=None, dest="rw", imm=False):
    """Two-operand legacy SSE form: xmm, xmm/mem [, imm8]."""
    tail = [imm8()] if imm else []
    add(asm, ext, [vreg(128, dest), vreg(128, "r")] + tail)
    add(asm, ext, [vreg(128, dest), mem(scalar_width or 128, "r")] + tail)


def sse_move(asm, ext, width=128, load=True, store=True):
    add(asm, ext, [vreg(128, "w"), vreg(128, "r")])
    if load:
        add(asm, ext, [vreg(128, "w"), mem(width, "r")])
    if store:
        add(asm, ext, [mem(width, "w"), vreg(128, "r")])


SSE_PS = "ADD SUB MUL DIV MIN MAX AND ANDN OR XOR UNPCKH UNPCKL".split()
for op in SSE_PS:
    sse_arith(op + "PS", "SSE")
    if op in ("ADD", "SUB", "MUL", "DIV", "MIN", "MAX"):
        sse_arith(op + "SS", "SSE", scalar_width=32)
for op in ("SQRT", "RCP", "RSQRT"):
    sse_arith(op + "PS", "SSE", dest="w")
    sse_arith(op + "SS", "SSE", scalar_width=32)
sse_arith("CMPPS", "SSE", imm=True)
sse_arith("CMPSS", "SSE", scalar_width=32, imm=True)
sse_arith("SHUFPS", "SSE", imm=True)
for m in ("MOVAPS", "MOVUPS"):
    sse_move(m, "SSE")
add("MOVSS", "SSE", [vreg(128, "rw"), vreg(128, "r")])
add("MOVSS", "SSE", [vreg(128, "w"), mem(32, "r")])
add("MOVSS", "SSE", [mem(32, "w"), vreg(128, "r")])
add("MOVHLPS", "SSE", [vreg(128, "rw"), vreg(128, "r")])
add("MOVLHPS", "SSE", [vreg(128, "rw"), vreg(128, "r")])
for m in ("MOVHPS", "MOVLPS"):
    add(m, "SSE", [vreg(128, "rw"), mem(64, "r")])
    add(m, "SSE", [mem(64, "w"), vreg(128, "r")])
add("MOVNTPS", "SSE", [mem(128, "w"), vreg(128, "r")])
for m in ("COMISS", "UCOMISS"):
    add(m, "SSE", [vreg(128, "r"), vreg(128, "r"), flags()])
    add(m, "SSE", [vreg(128, "r"), mem(32, "r"), flags()])
add("CVTSI2SS", "SSE", [vreg(128, "rw"), reg(64, GPR64, "r")])
add("CVTSI2SS", "SSE", [vreg(128, "rw"), mem(64, "r")])
add("CVTSI2SS", "SSE", [vreg(128, "rw"), reg(32, GPR32, "r")], suffix="_32")
for m in ("CVTSS2SI", "CVTTSS2SI"):
    add(m, "SSE", [reg(64, GPR64, "w"), vreg(128, "r")])
    add(m, "SSE", [reg(32, GPR32, "w"), vreg(128, "r")], suffix="_32")
add("CVTPI2PS", "SSE", [vreg(128, "rw"), reg(64, MM, "r")])
add("CVTPS2PI", "SSE", [reg(64, MM, "w"), vreg(128, "r")])
add("MOVMSKPS", "SSE", [reg(32, GPR32, "w"), vreg(128, "r")])
add("LDMXCSR", "SSE", [mem(32, "r")])
add("STMXCSR", "SSE", [mem(32, "w")])
for m in ("PREFETCHNTA", "PREFETCHT0", "PREFETCHT1", "PREFETCHT2"):
    add(m, "SSE", [mem(8, "r")])
add("SFENCE", "SSE", [])

SSE2_PD = "ADD SUB MUL DIV MIN MAX AND ANDN OR XOR UNPCKH UNPCKL".split()
for op in SSE2_PD:
    sse_arith(op + "PD", "SSE2")
    if op in ("ADD", "SUB", "MUL", "DIV", "MIN", "MAX"):
        sse_arith(op + "SD", "SSE2", scalar_width=64)
sse_arith("SQRTPD", "SSE2", dest="w")
sse_arith("SQRTSD", "SSE2", scalar_width=64)
sse_arith("CMPPD", "SSE2", imm=True)
sse_arith("CMPSD", "SSE2", scalar_width=64, imm=True)
sse_arith("SHUFPD", "SSE2", imm=True)
for m in ("MOVAPD", "MOVUPD"):
    sse_move(m, "SSE2")
add("MOVSD", "SSE2", [vreg(128, "rw"), vreg(128, "r")], suffix="_XMM")
add("MOVSD", "SSE2", [vreg(128, "w"), mem(64, "r")], suffix="_XMM")
add("MOVSD", "SSE2", [mem(64, "w"), vreg(128, "r")], suffix="_XMM")
for m in ("MOVHPD", "MOVLPD"):
    add(m, "SSE2", [vreg(128, "rw"), mem(64, "r")])
    add(m, "SSE2", [mem(64, "w"), vreg(128, "r")])
add("MOVNTPD", "SSE2", [mem(128, "w"), vreg(128, "r")])
for m in ("COMISD", "UCOMISD"):
    add(m, "SSE2", [vreg(128, "r"), vreg(128, "r"), flags()])
    add(m, "SSE2", [vreg(128, "r"), mem(64, "r"), flags()])
for m in ("CVTPD2PS", "CVTPS2PD", "CVTDQ2PS", "CVTPS2DQ", "CVTTPS2DQ",
          "CVTDQ2PD", "CVTPD2DQ", "CVTTPD2DQ"):
    add(m, "SSE2", [vreg(128, "w"), vreg(128, "r")])
    add(m, "SSE2", [vreg(128, "w"), mem(64 if m in ("CVTPS2PD", "CVTDQ2PD") else 128, "r")])
add("CVTSD2SS", "SSE2", [vreg(128, "rw"), vreg(128, "r")])
add("CVTSD2SS", "SSE2", [vreg(128, "rw"), mem(64, "r")])
add("CVTSS2SD", "SSE2", [vreg(128, "rw"), vreg(128, "r")])
add("CVTSS2SD", "SSE2", [vreg(128, "rw"), mem(32, "r")])
add("CVTSI2SD", "SSE2", [vreg(128, "rw"), reg(64, GPR64, "r")])
add("CVTSI2SD", "SSE2", [vreg(128, "rw"), mem(64, "r")])
add("CVTSI2SD", "SSE2", [vreg(128, "rw"), reg(32, GPR32, "r")], suffix="_32")
for m in ("CVTSD2SI", "CVTTSD2SI"):
    add(m, "SSE2", [reg(64, GPR64, "w"), vreg(128, "r")])
    add(m, "SSE2", [reg(64, GPR64, "w"), mem(64, "r")])
    add(m, "SSE2", [reg(32, GPR32, "w"), vreg(128, "r")], suffix="_32")
add("CVTPD2PI", "SSE2", [reg(64, MM, "w"), vreg(128, "r")])
add("CVTPI2PD", "SSE2", [vreg(128, "w"), reg(64, MM, "r")])
add("MOVMSKPD", "SSE2", [reg(32, GPR32, "w"), vreg(128, "r")])

SSE2_INT = ("PADDB PADDW PADDD PADDQ PSUBB PSUBW PSUBD PSUBQ PADDSB PADDSW PADDUSB "
            "PADDUSW PSUBSB PSUBSW PSUBUSB PSUBUSW PMULLW PMULHW PMULHUW PMULUDQ "
            "PMADDWD PAVGB PAVGW PMINUB PMAXUB PMINSW PMAXSW PSADBW PAND PANDN POR "
            "PXOR PCMPEQB PCMPEQW PCMPEQD PCMPGTB PCMPGTW PCMPGTD PACKSSWB PACKSSDW "
            "PACKUSWB PUNPCKHBW PUNPCKHWD PUNPCKHDQ PUNPCKHQDQ PUNPCKLBW PUNPCKLWD "
            "PUNPCKLDQ PUNPCKLQDQ").split()
for m in SSE2_INT:
    sse_arith(m, "SSE2")
    add(m, "MMX", [reg(64, MM, "rw"), reg(64, MM, "r")])
SSE2_SHIFT = "PSLLW PSLLD PSLLQ PSRLW PSRLD PSRLQ PSRAW PSRAD".split()
for m in SSE2_SHIFT:
    sse_arith(m, "SSE2")
    add(m, "SSE2", [vreg(128, "rw"), imm8()], suffix="_IMM")
    add(m, "MMX", [reg(64, MM, "rw"), imm8()])
for m in ("PSLLDQ", "PSRLDQ"):
    add(m, "SSE2", [vreg(128, "rw"), imm8()])
for m in ("PSHUFD", "PSHUFHW", "PSHUFLW"):
    add(m, "SSE2", [vreg(128, "w"), vreg(128, "r"), imm8()])
    add(m, "SSE2", [vreg(128, "w"), mem(128, "r"), imm8()])
for m in ("MOVDQA", "MOVDQU"):
    sse_move(m, "SSE2")
add("MOVNTDQ", "SSE2", [mem(128, "w"), vreg(128, "r")])
add("MOVQ", "SSE2", [vreg(128, "w"), vreg(128, "r")], suffix="_XMM")
add("MOVQ", "SSE2", [vreg(128, "w"), reg(64, GPR64, "r")])
add("MOVQ", "SSE2", [reg(64, GPR64, "w"), vreg(128, "r")])
add("MOVQ", "SSE2", [vreg(128, "w"), mem(64, "r")], suffix="_XMM")
add("MOVD", "SSE2", [vreg(128, "w"), reg(32, GPR32, "r")])
add("MOVD", "SSE2", [reg(32, GPR32, "w"), vreg(128, "r")])
add("PMOVMSKB", "SSE2", [reg(32, GPR32, "w"), vreg(128, "r")])
add("PINSRW", "SSE2", [vreg(128, "rw"), reg(32, GPR32, "r"), imm8()])
add("PEXTRW", "SSE2", [reg(32, GPR32, "w"), vreg(128, "r"), imm8()])
add("MASKMOVDQU", "SSE2", [vreg(128, "r"), vreg(128, "r"), ("mem", 128, "w", None, True)])
for m in ("LFENCE", "MFENCE", "PAUSE"):
    add(m, "SSE2", [])
add("CLFLUSH", "SSE2", [mem(8, "r")])

for m in ("ADDSUBPS", "HADDPS", "HSUBPS"):
    sse_arith(m, "SSE3")
for m in ("ADDSUBPD", "HADDPD", "HSUBPD"):
    sse_arith(m, "SSE3")
for m in ("MOVSHDUP", "MOVSLDUP"):
    add(m, "SSE3", [vreg(128, "w"), vreg(128, "r")])
    add(m, "SSE3", [vreg(128, "w"), mem(128, "r")])
add("MOVDDUP", "SSE3", [vreg(128, "w"), vreg(128, "r")])
add("MOVDDUP", "SSE3", [vreg(128, "w"), mem(64, "r")])
add("LDDQU", "SSE3", [vreg(128, "w"), mem(128, "r")])

SSSE3 = ("PABSB PABSW PABSD PSIGNB PSIGNW PSIGND PHADDW PHADDD PHADDSW PHSUBW "
         "PHSUBD PHSUBSW PMADDUBSW PMULHRSW PSHUFB").split()
for m in SSSE3:
    sse_arith(m, "SSSE3", dest="w" if m.startswith("PABS") else "rw")
    add(m, "SSSE3", [reg(64, MM, "rw"), reg(64, MM, "r")], suffix="_MMX")
sse_arith("PALIGNR", "SSSE3", imm=True)

for m in ("BLENDPS", "DPPS", "ROUNDPS"):
    sse_arith(m, "SSE4", imm=True, dest="w" if m == "ROUNDPS" else "rw")
for m in ("BLENDPD", "DPPD", "ROUNDPD"):
    sse_arith(m, "SSE4", imm=True, dest="w" if m == "ROUNDPD" else "rw")
sse_arith("ROUNDSS", "SSE4", scalar_width=32, imm=True)
sse_arith("ROUNDSD", "SSE4", scalar_width=64, imm=True)
sse_arith("INSERTPS", "SSE4", scalar_width=32, imm=True)
add("EXTRACTPS", "SSE4", [reg(32, GPR32, "w"), vreg(128, "r"), imm8()])
for m in ("PBLENDW", "MPSADBW"):
    sse_arith(m, "SSE4", imm=True)
SSE4_INT = ("PMULLD PMULDQ PMINSB PMINSD PMINUW PMINUD PMAXSB PMAXSD PMAXUW PMAXUD "
            "PCMPEQQ PCMPGTQ PACKUSDW").split()
for m in SSE4_INT:
    sse_arith(m, "SSE4")
add("PHMINPOSUW", "SSE4", [vreg(128, "w"), vreg(128, "r")])
add("PTEST", "SSE4", [vreg(128, "r"), vreg(128, "r"), flags()])
add("PTEST", "SSE4", [vreg(128, "r"), mem(128, "r"), flags()])
for s in ("SX", "ZX"):
    for t in ("BW", "BD", "BQ", "WD", "WQ", "DQ"):
        m = f"PMOV{s}{t}"
        add(m, "SSE4", [vreg(128, "w"), vreg(128, "r")])
        add(m, "SSE4", [vreg(128, "w"), mem(64, "r")])
add("MOVNTDQA", "SSE4", [vreg(128, "w"), mem(128, "r")])
add("PINSRQ", "SSE4", [vreg(128, "rw"), reg(64, GPR64, "r"), imm8()])
add("PEXTRQ", "SSE4", [reg(64, GPR64, "w"), vreg(128, "r"), imm8()])
add("PINSRD", "SSE4", [vreg(128, "rw"), reg(32, GPR32, "r"), imm8()])
add("PEXTRD", "SSE4", [reg(32, GPR32, "w"), vreg(128, "r"), imm8()])
for m in ("PCMPESTRI", "PCMPISTRI", "PCMPESTRM", "PCMPISTRM"):
    add(m, "SSE4", [vreg(128, "r"), vreg(128, "r"), imm8(), flags()])
    add(m, "SSE4", [vreg(128, "r"), mem(128, "r"), imm8(), flags()])
add("CRC32", "SSE4", [reg(64, GPR64, "rw"), reg(64, GPR64, "r")])
add("CRC32", "SSE4", [reg(64, GPR64, "rw"), mem(64, "r")])

for m in ("AESENC", "AESENCLAST", "AESDEC", "AESDECLAST"):
    sse_arith(m, "AES")
add("AESIMC", "AES", [vreg(128, "w"), vreg(128, "r")])
add("AESIMC", "AES", [vreg(128, "w"), mem(128, "r")])
add("AESKEYGENASSIST", "AES", [vreg(128, "w"), vreg(128, "r"), imm8()])
add("AESKEYGENASSIST", "AES", [vreg(128, "w"), mem(128, "r"), imm8()])
sse_arith("PCLMULQDQ", "PCLMULQDQ", imm=True)
for m in ("SHA1NEXTE", "SHA1MSG1", "SHA1MSG2", "SHA256MSG1", "SHA256MSG2"):
    sse_arith(m, "SHA")
sse_arith("SHA1RNDS4", "SHA", imm=True)

# ---------------------------------------------------------------- VEX (AVX/AVX2)

def vex3(asm, ext, widths=(128, 256), scalar=None, dest="w", imm=False):
    tail = [imm8()] if imm else []
    for w in widths:
        add(asm, ext, [vreg(w, dest), vreg(w, "r"), vreg(w, "r")] + tail)
        add(asm, ext, [vreg(w, dest), vreg(w, "r"), mem(scalar or w, "r")] + tail)


def vex2(asm, ext, widths=(128, 256), src_width=None, dest="w", imm=False):
    tail = [imm8()] if imm else []
    for w in widths:
        add(asm, ext, [vreg(w, dest), vreg(w, "r")] + tail)
        add(asm, ext, [vreg(w, dest), mem(src_width or w, "r")] + tail)


FP_OPS = "ADD SUB MUL DIV MIN MAX".split()
FP_LOGIC = "AND ANDN OR XOR UNPCKH UNPCKL".split()
for p, s, sw in (("PS", "SS", 32), ("PD", "SD", 64)):
    for op in FP_OPS:
        vex3(f"V{op}{p}", "AVX")
        vex3(f"V{op}{s}", "AVX", widths=(128,), scalar=sw)
    for op in FP_LOGIC:
        vex3(f"V{op}{p}", "AVX")
    vex2(f"VSQRT{p}", "AVX")
    vex3(f"VSQRT{s}", "AVX", widths=(128,), scalar=sw)
    vex3(f"VCMP{p}", "AVX", imm=True)
    vex3(f"VCMP{s}", "AVX", widths=(128,), scalar=sw, imm=True)
    vex3(f"VSHUF{p}", "AVX", imm=True)
    vex3(f"VBLEND{p}", "AVX", imm=True)
    vex3(f"VADDSUB{p}", "AVX")
    vex3(f"VHADD{p}", "AVX")
    vex3(f"VHSUB{p}", "AVX")
    vex2(f"VROUND{p}", "AVX", imm=True)
    vex3(f"VROUND{s}", "AVX", widths=(128,), scalar=sw, imm=True)
    vex2(f"VPERMIL{p}", "AVX", imm=True)
    vex3(f"VPERMIL{p}", "AVX")
    for m in (f"VMOVA{p}", f"VMOVU{p}"):
        for w in (128, 256):
            add(m, "AVX", [vreg(w, "w"), vreg(w, "r")])
            add(m, "AVX", [vreg(w, "w"), mem(w, "r")])
            add(m, "AVX", [mem(w, "w"), vreg(w, "r")])
    for w in (128, 256):
        add(f"VMOVNT{p}", "AVX", [mem(w, "w"), vreg(w, "r")])
        add(f"VTEST{p}", "AVX", [vreg(w, "r"), vreg(w, "r"), flags()])
        add(f"VMASKMOV{p}", "AVX", [vreg(w, "w"), vreg(w, "r"), mem(w, "r")])
        add(f"VBLENDV{p}", "AVX", [vreg(w, "w"), vreg(w, "r"), vreg(w, "r"), vreg(w, "r")])
    vex3(f"VMOV{s}", "AVX", widths=(128,), scalar=sw)
    add(f"VCOMI{s}", "AVX", [vreg(128, "r"), vreg(128, "r"), flags()])
    add(f"VUCOMI{s}", "AVX", [vreg(128, "r"), vreg(128, "r"), flags()])
vex3("VDPPS", "AVX", imm=True)
vex3("VDPPD", "AVX", widths=(128,), imm=True)
vex2("VRCPPS", "AVX")
vex2("VRSQRTPS", "AVX")
vex3("VRCPSS", "AVX", widths=(128,), scalar=32)
vex3("VRSQRTSS", "AVX", widths=(128,), scalar=32)
vex2("VMOVSHDUP", "AVX")
vex2("VMOVSLDUP", "AVX")
vex2("VMOVDDUP", "AVX")
vex3("VINSERTPS", "AVX", widths=(128,), scalar=32, imm=True)
add("VEXTRACTPS", "AVX", [reg(32, GPR32, "w"), vreg(128, "r"), imm8()])
vex3("VMOVHLPS", "AVX", widths=(128,))
vex3("VMOVLHPS", "AVX", widths=(128,))
add("VBROADCASTSS", "AVX", [vreg(128, "w"), mem(32, "r")])
add("VBROADCASTSS", "AVX", [vreg(256, "w"), mem(32, "r")])
add("VBROADCASTSD", "AVX", [vreg(256, "w"), mem(64, "r")])
add("VBROADCASTF128", "AVX", [vreg(256, "w"), mem(128, "r")])
add("VINSERTF128", "AVX", [vreg(256, "w"), vreg(256, "r"), vreg(128, "r"), imm8()])
add("VINSERTF128", "AVX", [vreg(256, "w"), vreg(256, "r"), mem(128, "r"), imm8()])
add("VEXTRACTF128", "AVX", [vreg(128, "w"), vreg(256, "r"), imm8()])
add("VEXTRACTF128", "AVX", [mem(128, "w"), vreg(256, "r"), imm8()])
add("VPERM2F128", "AVX", [vreg(256, "w"), vreg(256, "r"), vreg(256, "r"), imm8()])
add("VPERM2F128", "AVX", [vreg(256, "w"), vreg(256, "r"), mem(256, "r"), imm8()])
add("VZEROUPPER", "AVX", [])
add("VZEROALL", "AVX", [])
add("VLDMXCSR", "AVX", [mem(32, "r")])
add("VSTMXCSR", "AVX", [mem(32, "w")])
for m in ("VCVTPD2PS", "VCVTTPD2DQ", "VCVTPD2DQ"):
    add(m, "AVX", [vreg(128, "w"), vreg(128, "r")], suffix="X")
    add(m, "AVX", [vreg(128, "w"), vreg(256, "r")], suffix="Y")
    add(m, "AVX", [vreg(128, "w"), mem(256, "r")], suffix="Y")
for m in ("VCVTPS2PD", "VCVTDQ2PD"):
    add(m, "AVX", [vreg(128, "w"), vreg(128, "r")])
    add(m, "AVX", [vreg(256, "w"), vreg(128, "r")])
    add(m, "AVX", [vreg(256, "w"), mem(128, "r")])
for m in ("VCVTDQ2PS", "VCVTPS2DQ", "VCVTTPS2DQ"):
    vex2(m, "AVX")
vex3("VCVTSD2SS", "AVX", widths=(128,), scalar=64)
vex3("VCVTSS2SD", "AVX", widths=(128,), scalar=32)
add("VCVTSI2SD", "AVX", [vreg(128, "w"), vreg(128, "r"), reg(64, GPR64, "r")])
add("VCVTSI2SS", "AVX", [vreg(128, "w"), vreg(128, "r"), reg(64, GPR64, "r")])
for m in ("VCVTSD2SI", "VCVTTSD2SI", "VCVTSS2SI", "VCVTTSS2SI"):
    add(m, "AVX", [reg(64, GPR64, "w"), vreg(128, "r")])

AVX_INT3 = ([m for m in SSE2_INT] + ["PSIGNB", "PSIGNW", "PSIGND", "PHADDW", "PHADDD",
            "PHADDSW", "PHSUBW", "PHSUBD", "PHSUBSW", "PMADDUBSW", "PMULHRSW", "PSHUFB"]
            + SSE4_INT)
for m in AVX_INT3:
    vex3("V" + m, "AVX", widths=(128,))
    vex3("V" + m, "AVX2", widths=(256,))
for m in SSE2_SHIFT:
    vex3("V" + m, "AVX", widths=(128,), scalar=128)
    add("V" + m, "AVX", [vreg(128, "w"), vreg(128, "r"), imm8()], suffix="_IMM")
    add("V" + m, "AVX2", [vreg(256, "w"), vreg(256, "r"), vreg(128, "r")])
    add("V" + m, "AVX2", [vreg(256, "w"), vreg(256, "r"), imm8()], suffix="_IMM")
for m in ("VPSLLDQ", "VPSRLDQ"):
    add(m, "AVX", [vreg(128, "w"), vreg(128, "r"), imm8()])
    add(m, "AVX2", [vreg(256, "w"), vreg(256, "r"), imm8()])
for m in ("VPABSB", "VPABSW", "VPABSD"):
    vex2(m, "AVX", widths=(128,))
    vex2(m, "AVX2", widths=(256,))
for m in ("VPSHUFD", "VPSHUFHW", "VPSHUFLW"):
    vex2(m, "AVX", widths=(128,), imm=True)
    vex2(m, "AVX2", widths=(256,), imm=True)
for m in ("VPALIGNR", "VPBLENDW", "VMPSADBW"):
    vex3(m, "AVX", widths=(128,), imm=True)
    vex3(m, "AVX2", widths=(256,), imm=True)
for m in ("VMOVDQA", "VMOVDQU"):
    for w, e in ((128, "AVX"), (256, "AVX")):
        add(m, e, [vreg(w, "w"), vreg(w, "r")])
        add(m, e, [vreg(w, "w"), mem(w, "r")])
        add(m, e, [mem(w, "w"), vreg(w, "r")])
add("VMOVQ", "AVX", [vreg(128, "w"), vreg(128, "r")], suffix="_XMM")
add("VMOVQ", "AVX", [vreg(128, "w"), reg(64, GPR64, "r")])
add("VMOVQ", "AVX", [reg(64, GPR64, "w"), vreg(128, "r")])
add("VMOVD", "AVX", [vreg(128, "w"), reg(32, GPR32, "r")])
add("VPTEST", "AVX", [vreg(128, "r"), vreg(128, "r"), flags()])
add("VPTEST", "AVX", [vreg(256, "r"), vreg(256, "r"), flags()])
add("VPHMINPOSUW", "AVX", [vreg(128, "w"), vreg(128, "r")])
for s in ("SX", "ZX"):
    for t in ("BW", "BD", "BQ", "WD", "WQ", "DQ"):
        add(f"VPMOV{s}{t}", "AVX", [vreg(128, "w"), vreg(128, "r")])
        add(f"VPMOV{s}{t}", "AVX2", [vreg(256, "w"), vreg(128, "r")])
add("VPINSRQ", "AVX", [vreg(128, "w"), vreg(128, "r"), reg(64, GPR64, "r"), imm8()])
add("VPEXTRQ", "AVX", [reg(64, GPR64, "w"), vreg(128, "r"), imm8()])
for m in ("VPCMPESTRI", "VPCMPISTRI", "VPCMPESTRM", "VPCMPISTRM"):
    add(m, "AVX", [vreg(128, "r"), vreg(128, "r"), imm8(), flags()])
add("VPMOVMSKB", "AVX", [reg(32, GPR32, "w"), vreg(128, "r")])
add("VPMOVMSKB", "AVX2", [reg(64, GPR64, "w"), vreg(256, "r")])
add("VMOVNTDQ", "AVX", [mem(128, "w"), vreg(128, "r")])
add("VMOVNTDQ", "AVX", [mem(256, "w"), vreg(256, "r")])
add("VMOVNTDQA", "AVX2", [vreg(256, "w"), mem(256, "r")])
add("VLDDQU", "AVX", [vreg(128, "w"), mem(128, "r")])
add("VLDDQU", "AVX", [vreg(256, "w"), mem(256, "r")])
for m in ("VPERMD", "VPERMPS"):
    vex3(m, "AVX2", widths=(256,))
for m in ("VPERMQ", "VPERMPD"):
    vex2(m, "AVX2", widths=(256,), imm=True)
for m in ("VPSLLVD", "VPSLLVQ", "VPSRLVD", "VPSRLVQ", "VPSRAVD"):
    vex3(m, "AVX2")
vex3("VPBLENDD", "AVX2", imm=True)
for m, sw in (("VPBROADCASTB", 8), ("VPBROADCASTW", 16), ("VPBROADCASTD", 32), ("VPBROADCASTQ", 64)):
    for w in (128, 256):
        add(m, "AVX2", [vreg(w, "w"), vreg(128, "r")])
        add(m, "AVX2", [vreg(w, "w"), mem(sw, "r")])
add("VBROADCASTSS", "AVX2", [vreg(256, "w"), vreg(128, "r")], suffix="_REG")
add("VBROADCASTSD", "AVX2", [vreg(256, "w"), vreg(128, "r")], suffix="_REG")
add("VINSERTI128", "AVX2", [vreg(256, "w"), vreg(256, "r"), vreg(128, "r"), imm8()])
add("VEXTRACTI128", "AVX2", [vreg(128, "w"), vreg(256, "r"), imm8()])
add("VPERM2I128", "AVX2", [vreg(256, "w"), vreg(256, "r"), vreg(256, "r"), imm8()])
for w in (128, 256):
    add("VPMASKMOVD", "AVX2", [vreg(w, "w"), vreg(w, "r"), mem(w, "r")])
    add("VPMASKMOVQ", "AVX2", [vreg(w, "w"), vreg(w, "r"), mem(w, "r")])

FMA_NAMES = []
for kind in ("VFMADD", "VFMSUB", "VFNMADD", "VFNMSUB"):
    for order in ("132", "213", "231"):
        for t in ("PD", "PS", "SD", "SS"):
            FMA_NAMES.append(f"{kind}{order}{t}")
for kind in ("VFMADDSUB", "VFMSUBADD"):
    for order in ("132", "213", "231"):
        for t in ("PD", "PS"):
            FMA_NAMES.append(f"{kind}{order}{t}")
for m in FMA_NAMES:
    if m.endswith(("SS", "SD")):
        vex3(m, "FMA", widths=(128,), scalar=32 if m.endswith("SS") else 64, dest="rw")
    else:
        vex3(m, "FMA", dest="rw")

for m in ("VCVTPH2PS",):
    add(m, "F16C", [vreg(128, "w"), vreg(128, "r")])
    add(m, "F16C", [vreg(256, "w"), vreg(128, "r")])
    add(m, "F16C", [vreg(256, "w"), mem(128, "r")])
add("VCVTPS2PH", "F16C", [vreg(128, "w"), vreg(128, "r"), imm8()])
add("VCVTPS2PH", "F16C", [vreg(128, "w"), vreg(256, "r"), imm8()])
add("VCVTPS2PH", "F16C", [mem(128, "w"), vreg(256, "r"), imm8()])

for m in ("VAESENC", "VAESENCLAST", "VAESDEC", "VAESDECLAST"):
    vex3(m, "AVXAES", widths=(128,))
    vex3(m, "VAES", widths=(256,))
vex2("VAESIMC", "AVXAES", widths=(128,))
vex2("VAESKEYGENASSIST", "AVXAES", widths=(128,), imm=True)
vex3("VPCLMULQDQ", "AVX", widths=(128,), imm=True)
vex3("VPCLMULQDQ", "VPCLMULQDQ", widths=(256,), imm=True)
for m in ("VPDPBUSD", "VPDPBUSDS", "VPDPWSSD", "VPDPWSSDS"):
    vex3(m, "AVX_VNNI", dest="rw")
for m in ("VPMADD52HUQ", "VPMADD52LUQ"):
    vex3(m, "AVX_IFMA", dest="rw")
for m in ("VGF2P8AFFINEQB", "VGF2P8AFFINEINVQB"):
    vex3(m, "GFNI", imm=True)
vex3("VGF2P8MULB", "GFNI")
sse_arith("GF2P8MULB", "GFNI")
sse_arith("GF2P8AFFINEQB", "GFNI", imm=True)
sse_arith("GF2P8AFFINEINVQB", "GFNI", imm=True)

# ---------------------------------------------------------------- EVEX (AVX-512)

MASK_MODES = (("", None), ("_MASK", "merge"), ("_MASKZ", "zero"))


def bcst_width(asm):
    """Element width usable for an embedded-broadcast memory operand, if any."""
    base = asm.rstrip("0123456789")
    if base.endswith(("PS", "D")) and not base.endswith("SD"):
        return 32
    if base.endswith(("PD", "Q")):
        return 64
    return None


def bcst(width, total):
    return ("mem", width, "r", None, False, f"{{1to{total // width}}}")


def evex_forms(asm, ext, dest_ops, src_regs, last, w, tail, scalar, allow_bcst=True):
    bw = bcst_width(asm) if allow_bcst and scalar is None else None
    for sfx, mode in MASK_MODES:
        mk = [reg(64, MASK, "r")] if mode else []
        z = mode == "zero"
        add(asm, ext, dest_ops + mk + src_regs + [last(w)] + tail, suffix=sfx + "_AVX512", zeroing=z)
        add(asm, ext, dest_ops + mk + src_regs + [mem(scalar or w, "r")] + tail, suffix=sfx + "_AVX512", zeroing=z)
        if bw:
            add(asm, ext, dest_ops + mk + src_regs + [bcst(bw, w)] + tail, suffix=sfx + "_BCST_AVX512", zeroing=z)


def evex3(asm, widths=(128, 256, 512), scalar=None, dest="w", imm=False, ext="AVX512EVEX",
          rounding=False):
    tail = [imm8()] if imm else []
    for w in widths:
        evex_forms(asm, ext, [vreg(w, dest)], [vreg(w, "r")], lambda w: vreg(w, "r"), w, tail, scalar)
    if rounding:
        # embedded rounding only exists for the register form at full vector width
        w = 128 if scalar else 512
        for sfx, mode in MASK_MODES:
            mk = [reg(64, MASK, "r")] if mode else []
            add(asm, ext, [vreg(w, dest)] + mk + [vreg(w, "r"), vreg(w, "r")] + tail,
                suffix=sfx + "_ER_AVX512", zeroing=mode == "zero", rounding=True)


def evex2(asm, widths=(128, 256, 512), dest="w", imm=False, src=None, ext="AVX512EVEX",
          rounding=False):
    tail = [imm8()] if imm else []
    for w in widths:
        sw = src(w) if src else w
        evex_forms(asm, ext, [vreg(w, dest)], [], lambda _w: vreg(sw, "r"), sw, tail, None,
                   allow_bcst=src is None)
    if rounding:
        w = max(widths)
        sw = src(w) if src else w
        for sfx, mode in MASK_MODES:
            mk = [reg(64, MASK, "r")] if mode else []
            add(asm, ext, [vreg(w, dest)] + mk + [vreg(sw, "r")] + tail,
                suffix=sfx + "_ER_AVX512", zeroing=mode == "zero", rounding=True)


def evex_cmp(asm, widths=(128, 256, 512), imm=True, scalar=None):
    tail = [imm8()] if imm else []
    for w in widths:
        bw = bcst_width(asm) if scalar is None else None
        for sfx, mode in MASK_MODES[:2]:
            mk = [reg(64, MASK, "r")] if mode else []
            dst = [reg(64, MASK, "w")]
            add(asm, "AVX512EVEX", dst + mk + [vreg(w, "r"), vreg(w, "r")] + tail, suffix=sfx + "_AVX512")
            add(asm, "AVX512EVEX", dst + mk + [vreg(w, "r"), mem(scalar or w, "r")] + tail, suffix=sfx + "_AVX512")
            if bw:
                add(asm, "AVX512EVEX", dst + mk + [vreg(w, "r"), bcst(bw, w)] + tail, suffix=sfx + "_BCST_AVX512")


for p, s, sw in (("PS", "SS", 32), ("PD", "SD", 64)):
    for op in FP_OPS:
        evex3(f"V{op}{p}", rounding=op not in ("MIN", "MAX"))
        evex3(f"V{op}{s}", widths=(128,), scalar=sw, rounding=op not in ("MIN", "MAX"))
    for op in FP_LOGIC:
        evex3(f"V{op}{p}")
    evex2(f"VSQRT{p}", rounding=True)
    evex3(f"VSQRT{s}", widths=(128,), scalar=sw, rounding=True)
    evex3(f"VSHUF{p}", imm=True)
    evex2(f"VPERMIL{p}", imm=True)
    evex3(f"VPERMIL{p}")
    evex3(f"VPERMI2{p}", dest="rw")
    evex3(f"VPERMT2{p}", dest="rw")
    evex3(f"VPERM{p}", widths=(256, 512))
    evex2(f"VRCP14{p}")
    evex2(f"VRSQRT14{p}")
    evex3(f"VRCP14{s}", widths=(128,), scalar=sw)
    evex3(f"VRSQRT14{s}", widths=(128,), scalar=sw)
    evex2(f"VRNDSCALE{p}", imm=True)
    evex3(f"VRNDSCALE{s}", widths=(128,), scalar=sw, imm=True)
    evex3(f"VSCALEF{p}", rounding=True)
    evex3(f"VSCALEF{s}", widths=(128,), scalar=sw, rounding=True)
    evex2(f"VGETEXP{p}")
    evex3(f"VGETEXP{s}", widths=(128,), scalar=sw)
    evex2(f"VGETMANT{p}", imm=True)
    evex3(f"VGETMANT{s}", widths=(128,), scalar=sw, imm=True)
    evex3(f"VFIXUPIMM{p}", dest="rw", imm=True)
    evex3(f"VRANGE{p}", imm=True)
    evex3(f"VRANGE{s}", widths=(128,), scalar=sw, imm=True)
    evex2(f"VREDUCE{p}", imm=True)
    evex3(f"VREDUCE{s}", widths=(128,), scalar=sw, imm=True)
    evex3(f"VBLENDM{p}")
    evex2(f"VEXPAND{p}")
    evex2(f"VCOMPRESS{p}")
    evex_cmp(f"VCMP{p}")
    evex_cmp(f"VCMP{s}", widths=(128,), scalar=sw)
    evex_cmp(f"VFPCLASS{p}", imm=True)
    for m in (f"VMOVA{p}", f"VMOVU{p}"):
        evex2(m)
    evex3(f"VMOV{s}", widths=(128,), scalar=sw)
evex3("VRCP28PS", widths=(512,))
evex3("VRSQRT28PD", widths=(512,))
for m in ("VCVTPD2PS", "VCVTPD2DQ", "VCVTTPD2DQ", "VCVTPD2UDQ", "VCVTTPD2UDQ",
          "VCVTQQ2PS", "VCVTUQQ2PS"):
    evex2(m, widths=(128, 256), src=lambda w: 2 * w, rounding=True)
for m in ("VCVTPS2PD", "VCVTDQ2PD", "VCVTUDQ2PD", "VCVTPS2QQ", "VCVTTPS2QQ", "VCVTPS2UQQ",
          "VCVTTPS2UQQ"):
    evex2(m, widths=(256, 512), src=lambda w: w // 2, rounding=True)
for m in ("VCVTDQ2PS", "VCVTPS2DQ", "VCVTTPS2DQ", "VCVTUDQ2PS", "VCVTPS2UDQ",
          "VCVTTPS2UDQ", "VCVTQQ2PD", "VCVTPD2QQ", "VCVTTPD2QQ", "VCVTUQQ2PD", "VCVTPD2UQQ",
          "VCVTTPD2UQQ"):
    evex2(m, rounding=True)
for m in ("VCVTSI2SS", "VCVTSI2SD", "VCVTUSI2SS", "VCVTUSI2SD"):
    add(m, "AVX512EVEX", [vreg(128, "w"), vreg(128, "r"), reg(64, GPR64, "r")], suffix="_AVX512")
    add(m, "AVX512EVEX", [vreg(128, "w"), vreg(128, "r"), mem(64, "r")], suffix="_AVX512")
for m in ("VCVTSS2SI", "VCVTSD2SI", "VCVTTSS2SI", "VCVTTSD2SI", "VCVTSS2USI", "VCVTSD2USI",
          "VCVTTSS2USI", "VCVTTSD2USI"):
    add(m, "AVX512EVEX", [reg(64, GPR64, "w"), vreg(128, "r")], suffix="_AVX512")
    add(m, "AVX512EVEX", [reg(32, GPR32, "w"), vreg(128, "r")], suffix="_32_AVX512")
for s_, ratio in (("SX", 4), ("ZX", 4), ("SX", 8), ("ZX", 8)):
    names = ("BD", "WQ") if ratio == 4 else ("BQ",)
    for t in names:
        for w in (128, 256, 512):
            for sfx, mode in MASK_MODES:
                mk = [reg(64, MASK, "r")] if mode else []
                add(f"VPMOV{s_}{t}", "AVX512EVEX", [vreg(w, "w")] + mk + [vreg(128, "r")],
                    suffix=sfx + "_AVX512", zeroing=mode == "zero")
                add(f"VPMOV{s_}{t}", "AVX512EVEX", [vreg(w, "w")] + mk + [mem(w // ratio, "r")],
                    suffix=sfx + "_M_AVX512", zeroing=mode == "zero")
for m in ("VPSLLDQ", "VPSRLDQ"):
    for w in (128, 256, 512):
        add(m, "AVX512EVEX", [vreg(w, "w"), vreg(w, "r"), imm8()], suffix="_AVX512")
        add(m, "AVX512EVEX", [vreg(w, "w"), mem(w, "r"), imm8()], suffix="_AVX512")
for w in (128, 256, 512):
    add("VPCLMULQDQ", "VPCLMULQDQ", [vreg(w, "w"), vreg(w, "r"), vreg(w, "r"), imm8()], suffix="_AVX512")
    add("VPCLMULQDQ", "VPCLMULQDQ", [vreg(w, "w"), vreg(w, "r"), mem(w, "r"), imm8()], suffix="_AVX512")
for m, sw in (("VBROADCASTF32X4", 128), ("VBROADCASTI32X4", 128), ("VBROADCASTF64X2", 128),
              ("VBROADCASTI64X2", 128), ("VBROADCASTF32X8", 256), ("VBROADCASTI32X8", 256),
              ("VBROADCASTF64X4", 256), ("VBROADCASTI64X4", 256), ("VBROADCASTI32X2", 64),
              ("VBROADCASTF32X2", 64), ("VPBROADCASTD", 32), ("VPBROADCASTW", 16),
              ("VBROADCASTSS", 32)):
    for w in (256, 512):
        if sw >= w:
            continue
        for sfx, mode in MASK_MODES:
            mk = [reg(64, MASK, "r")] if mode else []
            add(m, "AVX512EVEX", [vreg(w, "w")] + mk + [mem(sw, "r")], suffix=sfx + "_AVX512",
                zeroing=mode == "zero")
            if sw <= 64:
                add(m, "AVX512EVEX", [vreg(w, "w")] + mk + [vreg(128, "r")], suffix=sfx + "_REG_AVX512",
                    zeroing=mode == "zero")
for w in (128, 256):
    for m in ("VPDPBSSD", "VPDPBSSDS", "VPDPBSUD", "VPDPBSUDS", "VPDPBUUD", "VPDPBUUDS"):
        add(m, "AVX_VNNI_INT8", [vreg(w, "rw"), vreg(w, "r"), vreg(w, "r")])
        add(m, "AVX_VNNI_INT8", [vreg(w, "rw"), vreg(w, "r"), mem(w, "r")])
evex3("VCVTSD2SS", widths=(128,), scalar=64)
evex3("VCVTSS2SD", widths=(128,), scalar=32)

EVEX_INT = ("PADDB PADDW PADDD PADDQ PSUBB PSUBW PSUBD PSUBQ PADDSB PADDSW PADDUSB "
            "PADDUSW PSUBSB PSUBSW PSUBUSB PSUBUSW PMULLW PMULLD PMULLQ PMULHW PMULHUW "
            "PMULHRSW PMULUDQ PMULDQ PMADDWD PMADDUBSW PAVGB PAVGW PMINUB PMINUW PMINUD "
            "PMINUQ PMINSB PMINSW PMINSD PMINSQ PMAXUB PMAXUW PMAXUD PMAXUQ PMAXSB PMAXSW "
            "PMAXSD PMAXSQ PSADBW PANDD PANDQ PANDND PANDNQ PORD PORQ PXORD PXORQ "
            "PACKSSWB PACKSSDW PACKUSWB PACKUSDW PUNPCKHBW PUNPCKHWD PUNPCKHDQ PUNPCKHQDQ "
            "PUNPCKLBW PUNPCKLWD PUNPCKLDQ PUNPCKLQDQ PSHUFB PSLLVW PSLLVD PSLLVQ PSRLVW "
            "PSRLVD PSRLVQ PSRAVW PSRAVD PSRAVQ PROLVD PROLVQ PRORVD PRORVQ PERMB PERMW "
            "PERMD PERMQ PERMI2B PERMI2W PERMI2D PERMI2Q PERMT2B PERMT2W PERMT2D PERMT2Q "
            "PMULTISHIFTQB PBLENDMB PBLENDMW PBLENDMD PBLENDMQ PSHLDVW PSHLDVD PSHLDVQ "
            "PSHRDVW PSHRDVD PSHRDVQ PDPBUSD PDPBUSDS PDPWSSD PDPWSSDS PMADD52HUQ "
            "PMADD52LUQ GF2P8MULB").split()
ACCUM = {"PDPBUSD", "PDPBUSDS", "PDPWSSD", "PDPWSSDS", "PMADD52HUQ", "PMADD52LUQ",
         "PERMI2B", "PERMI2W", "PERMI2D", "PERMI2Q", "PERMT2B", "PERMT2W", "PERMT2D",
         "PERMT2Q", "PSHLDVW", "PSHLDVD", "PSHLDVQ", "PSHRDVW", "PSHRDVD", "PSHRDVQ"}
for m in EVEX_INT:
    evex3("V" + m, dest="rw" if m in ACCUM else "w")
for m in ("PTERNLOGD", "PTERNLOGQ"):
    evex3("V" + m, dest="rw", imm=True)
for m in ("PALIGNR", "PSHLDW", "PSHLDD", "PSHLDQ", "PSHRDW", "PSHRDD", "PSHRDQ",
          "ALIGND", "ALIGNQ", "GF2P8AFFINEQB", "GF2P8AFFINEINVQB", "DBPSADBW"):
    evex3("V" + m, imm=True)
for m in ("PABSB", "PABSW", "PABSD", "PABSQ", "PCONFLICTD", "PCONFLICTQ", "PLZCNTD",
          "PLZCNTQ", "POPCNTB", "POPCNTW", "POPCNTD", "POPCNTQ", "PEXPANDB", "PEXPANDW",
          "PEXPANDD", "PEXPANDQ", "PCOMPRESSB", "PCOMPRESSW", "PCOMPRESSD", "PCOMPRESSQ",
          "MOVDQA32", "MOVDQA64", "MOVDQU8", "MOVDQU16", "MOVDQU32", "MOVDQU64"):
    evex2("V" + m)
for m in ("PSHUFD", "PSHUFHW", "PSHUFLW", "PROLD", "PROLQ", "PRORD", "PRORQ"):
    evex2("V" + m, imm=True)
for m in ("PSLLW", "PSLLD", "PSLLQ", "PSRLW", "PSRLD", "PSRLQ", "PSRAW", "PSRAD", "PSRAQ"):
    evex2("V" + m, imm=True)
    evex3("V" + m, scalar=128)
for m in ("PCMPEQB", "PCMPEQW", "PCMPEQD", "PCMPEQQ", "PCMPGTB", "PCMPGTW", "PCMPGTD",
          "PCMPGTQ", "PTESTMB", "PTESTMW", "PTESTMD", "PTESTMQ", "PTESTNMB", "PTESTNMW",
          "PTESTNMD", "PTESTNMQ", "PSHUFBITQMB"):
    evex_cmp("V" + m, imm=False)
for m in ("PCMPB", "PCMPUB", "PCMPW", "PCMPUW", "PCMPD", "PCMPUD", "PCMPQ", "PCMPUQ"):
    evex_cmp("V" + m)
for src_t, names in (("BW", "PMOVSXBW PMOVZXBW"), ("DQ", "PMOVSXDQ PMOVZXDQ PMOVSXWD PMOVZXWD")):
    for m in names.split():
        evex2("V" + m, widths=(256, 512), src=lambda w: w // 2)
for m in ("PMOVQB", "PMOVSQB", "PMOVUSQB", "PMOVDB", "PMOVSDB", "PMOVUSDB", "PMOVQW",
          "PMOVSQW", "PMOVUSQW", "PMOVDW", "PMOVSDW", "PMOVUSDW", "PMOVQD", "PMOVSQD",
          "PMOVUSQD", "PMOVWB", "PMOVSWB", "PMOVUSWB"):
    for w in (128, 256, 512):
        add("V" + m, "AVX512EVEX", [vreg(128, "w"), vreg(w, "r")])
        add("V" + m, "AVX512EVEX", [vreg(128, "w"), reg(64, MASK, "r"), vreg(w, "r")], suffix="_MASK_AVX512")
for m in FMA_NAMES:
    if m.endswith(("SS", "SD")):
        evex3(m, widths=(128,), scalar=32 if m.endswith("SS") else 64, dest="rw", rounding=True)
    else:
        evex3(m, dest="rw", rounding=True)

FP16_OPS = "ADD SUB MUL DIV MIN MAX SCALEF".split()
for op in FP16_OPS:
    evex3(f"V{op}PH", rounding=op not in ("MIN", "MAX"))
    evex3(f"V{op}SH", widths=(128,), scalar=16, rounding=op not in ("MIN", "MAX"))
for m in ("VSQRTPH", "VRCPPH", "VRSQRTPH", "VGETEXPPH"):
    evex2(m)
for m in ("VGETMANTPH", "VREDUCEPH", "VRNDSCALEPH"):
    evex2(m, imm=True)
for m in ("VSQRTSH", "VRCPSH", "VRSQRTSH", "VGETEXPSH"):
    evex3(m, widths=(128,), scalar=16)
for m in ("VGETMANTSH", "VREDUCESH", "VRNDSCALESH"):
    evex3(m, widths=(128,), scalar=16, imm=True)
evex_cmp("VCMPPH")
evex_cmp("VCMPSH", widths=(128,), scalar=16)
evex_cmp("VFPCLASSPH")
for kind in ("VFMADD", "VFMSUB", "VFNMADD", "VFNMSUB"):
    for order in ("132", "213", "231"):
        evex3(f"{kind}{order}PH", dest="rw", rounding=True)
        evex3(f"{kind}{order}SH", widths=(128,), scalar=16, dest="rw")
for kind in ("VFMADDSUB", "VFMSUBADD"):
    for order in ("132", "213", "231"):
        evex3(f"{kind}{order}PH", dest="rw")
for m in ("VFMADDCPH", "VFCMADDCPH"):
    evex3(m, dest="rw")
for m in ("VFMULCPH", "VFCMULCPH"):
    evex3(m)
for m in ("VCVTPH2W", "VCVTPH2UW", "VCVTTPH2W", "VCVTTPH2UW", "VCVTW2PH", "VCVTUW2PH"):
    evex2(m)
for m in ("VCVTPH2DQ", "VCVTPH2UDQ", "VCVTTPH2DQ", "VCVTTPH2UDQ", "VCVTPH2PSX"):
    evex2(m, widths=(256, 512), src=lambda w: w // 2)
for m in ("VCVTDQ2PH", "VCVTUDQ2PH", "VCVTPS2PHX"):
    evex2(m, widths=(128, 256), src=lambda w: 2 * w)
for m in ("VCVTNE2PS2BF16", "VDPBF16PS"):
    evex3(m, dest="rw" if m == "VDPBF16PS" else "w")
evex2("VCVTNEPS2BF16", widths=(128, 256), src=lambda w: 2 * w)
for m in ("VPMOVM2B", "VPMOVM2W", "VPMOVM2D", "VPMOVM2Q"):
    for w in (128, 256, 512):
        add(m, "AVX512EVEX", [vreg(w, "w"), reg(64, MASK, "r")])
for m in ("VPMOVB2M", "VPMOVW2M", "VPMOVD2M", "VPMOVQ2M"):
    for w in (128, 256, 512):
        add(m, "AVX512EVEX", [reg(64, MASK, "w"), vreg(w, "r")])
for m in ("VMOVAPS", "VMOVUPS", "VMOVAPD", "VMOVUPD", "VMOVDQA32", "VMOVDQA64",
          "VMOVDQU8", "VMOVDQU16", "VMOVDQU32", "VMOVDQU64"):
    for w in (128, 256, 512):
        add(m, "AVX512EVEX", [mem(w, "w"), vreg(w, "r")], suffix="_STORE_AVX512")
        add(m, "AVX512EVEX", [mem(w, "w"), reg(64, MASK, "r"), vreg(w, "r")], suffix="_STORE_MASK_AVX512")
for m in ("VEXP2PS", "VEXP2PD", "VRCP28PD", "VRSQRT28PS"):
    evex2(m, widths=(512,))
for m in ("VAESENC", "VAESENCLAST", "VAESDEC", "VAESDECLAST"):
    evex3(m, widths=(128, 256, 512), ext="VAES")
for m in ("VINSERTF32X4", "VINSERTF64X2", "VINSERTI32X4", "VINSERTI64X2"):
    for w in (256, 512):
        add(m, "AVX512EVEX", [vreg(w, "w"), vreg(w, "r"), vreg(128, "r"), imm8()])
        add(m, "AVX512EVEX", [vreg(w, "w"), vreg(w, "r"), mem(128, "r"), imm8()])
for m in ("VINSERTF32X8", "VINSERTF64X4", "VINSERTI32X8", "VINSERTI64X4"):
    add(m, "AVX512EVEX", [vreg(512, "w"), vreg(512, "r"), vreg(256, "r"), imm8()])
    add(m, "AVX512EVEX", [vreg(512, "w"), vreg(512, "r"), mem(256, "r"), imm8()])
for m in ("VEXTRACTF32X4", "VEXTRACTF64X2", "VEXTRACTI32X4", "VEXTRACTI64X2"):
    for w in (256, 512):
        add(m, "AVX512EVEX", [vreg(128, "w"), vreg(w, "r"), imm8()])
        add(m, "AVX512EVEX", [mem(128, "w"), vreg(w, "r"), imm8()])
for m in ("VSHUFF32X4", "VSHUFF64X2", "VSHUFI32X4", "VSHUFI64X2"):
    evex3(m, widths=(256, 512), imm=True)
for m, sw in (("VPBROADCASTB", 8), ("VPBROADCASTQ", 64), ("VBROADCASTSD", 64)):
    for w in (256, 512):
        add(m, "AVX512EVEX", [vreg(w, "w"), vreg(128, "r")], suffix="_AVX512")
        add(m, "AVX512EVEX", [vreg(w, "w"), mem(sw, "r")], suffix="_AVX512")
        add(m, "AVX512EVEX", [vreg(w, "w"), reg(64, MASK, "r"), vreg(128, "r")], suffix="_MASK_AVX512")
add("VPBROADCASTQ", "AVX512EVEX", [vreg(512, "w"), reg(64, GPR64, "r")], suffix="_GPR")
for op in ("KAND", "KANDN", "KOR", "KXOR", "KXNOR", "KADD"):
    for t in "BWDQ":
        add(op + t, "AVX512VEX", [reg(64, MASK, "w"), reg(64, MASK, "r"), reg(64, MASK, "r")])
for m in ("KUNPCKBW", "KUNPCKWD", "KUNPCKDQ"):
    add(m, "AVX512VEX", [reg(64, MASK, "w"), reg(64, MASK, "r"), reg(64, MASK, "r")])
for op in ("KNOT", "KMOV"):
    for t in "BWDQ":
        add(op + t, "AVX512VEX", [reg(64, MASK, "w"), reg(64, MASK, "r")])
add("KMOVQ", "AVX512VEX", [reg(64, MASK, "w"), reg(64, GPR64, "r")], suffix="_GPR")
add("KMOVQ", "AVX512VEX", [reg(64, GPR64, "w"), reg(64, MASK, "r")], suffix="_TOGPR")
add("KMOVQ", "AVX512VEX", [reg(64, MASK, "w"), mem(64, "r")], suffix="_MEM")
for m in ("KSHIFTLQ", "KSHIFTRQ", "KSHIFTLW", "KSHIFTRW"):
    add(m, "AVX512VEX", [reg(64, MASK, "w"), reg(64, MASK, "r"), imm8()])
for m in ("KORTESTQ", "KTESTQ", "KORTESTW"):
    add(m, "AVX512VEX", [reg(64, MASK, "r"), reg(64, MASK, "r"), flags()])
# Gathers/scatters need a VSIB address operand, which is outside the ingested subset.
for m in ("VGATHERDPS", "VGATHERQPD", "VPGATHERDD", "VPSCATTERDD", "VSCATTERQPD"):
    add(m, "AVX512EVEX", [vreg(512, "w"), reg(64, MASK, "rw"), ("agen", 512, "r", None)])

# ---------------------------------------------------------------- general purpose

ALU = "ADD ADC SUB SBB AND OR XOR".split()
for m in ALU:
    add(m, "BASE", [reg(64, GPR64, "rw"), reg(64, GPR64, "r"), flags()])
    add(m, "BASE", [reg(64, GPR64, "rw"), mem(64, "r"), flags()])
    add(m, "BASE", [mem(64, "rw"), reg(64, GPR64, "r"), flags()])
    add(m, "BASE", [reg(64, GPR64, "rw"), imm8(), flags()])
    add(m, "BASE", [mem(64, "rw"), imm8(), flags()])
    add(m, "BASE", [reg(32, GPR32, "rw"), reg(32, GPR32, "r"), flags()])
    add(m, "BASE", [reg(32, GPR32, "rw"), imm8(), flags()])
    for w, names in ((8, "AL,CL,DL,BL,SPL,BPL,SIL,DIL,R8B,R9B,R10B,R11B,R12B,R13B,R14B,R15B"),
                     (16, "AX,CX,DX,BX,SP,BP,SI,DI,R8W,R9W,R10W,R11W,R12W,R13W,R14W,R15W")):
        add(m, "BASE", [reg(w, names, "rw"), reg(w, names, "r"), flags()], suffix=f"_{w}")
        add(m, "BASE", [mem(w, "rw"), reg(w, names, "r"), flags()], suffix=f"_{w}")
        add(m, "BASE", [reg(w, names, "rw"), imm8(), flags()], suffix=f"_{w}I")
    add("LOCK " + m, "BASE", [mem(64, "rw"), reg(64, GPR64, "r"), flags()], suffix="_LOCK")
    add("LOCK " + m, "BASE", [mem(64, "rw"), imm8(), flags()], suffix="_LOCK")
for m in ("CMP", "TEST"):
    add(m, "BASE", [reg(64, GPR64, "r"), reg(64, GPR64, "r"), flags()])
    add(m, "BASE", [reg(64, GPR64, "r"), mem(64, "r"), flags()])
    add(m, "BASE", [reg(64, GPR64, "r"), imm8(), flags()])
    add(m, "BASE", [reg(32, GPR32, "r"), reg(32, GPR32, "r"), flags()])
add("MOV", "BASE", [reg(64, GPR64, "w"), reg(64, GPR64, "r")])
add("MOV", "BASE", [reg(64, GPR64, "w"), mem(64, "r")])
add("MOV", "BASE", [mem(64, "w"), reg(64, GPR64, "r")])
add("MOV", "BASE", [reg(32, GPR32, "w"), reg(32, GPR32, "r")])
for m in ("INC", "DEC", "NEG", "NOT"):
    add(m, "BASE", [reg(64, GPR64, "rw"), flags()])
    add(m, "BASE", [mem(64, "rw"), flags()])
    add(m, "BASE", [reg(32, GPR32, "rw"), flags()])
for m in ("SHL", "SHR", "SAR", "ROL", "ROR", "RCL", "RCR"):
    add(m, "BASE", [reg(64, GPR64, "rw"), imm8(), flags()])
    add(m, "BASE", [mem(64, "rw"), imm8(), flags()])
    add(m, "BASE", [reg(32, GPR32, "rw"), imm8(), flags()])
for m in ("SHLD", "SHRD"):
    add(m, "BASE", [reg(64, GPR64, "rw"), reg(64, GPR64, "r"), imm8(), flags()])
add("IMUL", "BASE", [reg(64, GPR64, "rw"), reg(64, GPR64, "r"), flags()])
add("IMUL", "BASE", [reg(64, GPR64, "rw"), mem(64, "r"), flags()])
add("IMUL", "BASE", [reg(64, GPR64, "w"), reg(64, GPR64, "r"), imm8(), flags()], suffix="_IMM")
for m in ("BSF", "BSR"):
    add(m, "BASE", [reg(64, GPR64, "w"), reg(64, GPR64, "r"), flags()])
    add(m, "BASE", [reg(64, GPR64, "w"), mem(64, "r"), flags()])
add("BSWAP", "BASE", [reg(64, GPR64, "rw")])
add("XCHG", "BASE", [reg(64, GPR64, "rw"), reg(64, GPR64, "rw")])
add("XADD", "BASE", [reg(64, GPR64, "rw"), reg(64, GPR64, "rw"), flags()])
for m in ("BT", "BTS", "BTR", "BTC"):
    add(m, "BASE", [reg(64, GPR64, "rw" if m != "BT" else "r"), reg(64, GPR64, "r"), flags()])
    add(m, "BASE", [reg(64, GPR64, "rw" if m != "BT" else "r"), imm8(), flags()], suffix="_IMM")
CC = "O NO B AE E NE BE A S NS P NP L GE LE G".split()
for c in CC:
    add("CMOV" + c, "BASE", [reg(64, GPR64, "rw"), reg(64, GPR64, "r"), ("flags", 0, "r", None, True)])
    add("CMOV" + c, "BASE", [reg(64, GPR64, "rw"), mem(64, "r"), ("flags", 0, "r", None, True)])
    add("SET" + c, "BASE", [reg(8, "AL,CL,DL,BL,SPL,BPL,SIL,DIL,R8B,R9B,R10B,R11B,R12B,R13B,R14B,R15B", "w"),
                            ("flags", 0, "r", None, True)])
add("LEA", "BASE", [reg(64, GPR64, "w"), ("agen", 64, "r", None)])
add("MOVZX", "BASE", [reg(64, GPR64, "w"), mem(8, "r")])
add("MOVSXD", "BASE", [reg(64, GPR64, "w"), reg(32, GPR32, "r")])
add("NOP", "BASE", [])
add("CPUID", "BASE", [("reg", 32, "rw", "EAX", True), ("reg", 32, "rw", "ECX", True)])
add("RDTSC", "BASE", [("reg", 32, "w", "EAX", True), ("reg", 32, "w", "EDX", True)])
add("RDTSCP", "RDTSCP", [("reg", 32, "w", "EAX", True), ("reg", 32, "w", "EDX", True)])
add("POPCNT", "POPCNT", [reg(64, GPR64, "w"), reg(64, GPR64, "r"), flags()])
add("LZCNT", "LZCNT", [reg(64, GPR64, "w"), reg(64, GPR64, "r"), flags()])
add("TZCNT", "BMI1", [reg(64, GPR64, "w"), reg(64, GPR64, "r"), flags()])
for m in ("ANDN", "BEXTR"):
    add(m, "BMI1", [reg(64, GPR64, "w"), reg(64, GPR64, "r"), reg(64, GPR64, "r"), flags()])
    add(m, "BMI1", [reg(64, GPR64, "w"), reg(64, GPR64, "r"), mem(64, "r"), flags()])
for m in ("BLSI", "BLSMSK", "BLSR"):
    add(m, "BMI1", [reg(64, GPR64, "w"), reg(64, GPR64, "r"), flags()])
    add(m, "BMI1", [reg(64, GPR64, "w"), mem(64, "r"), flags()])
for m in ("BZHI", "PDEP", "PEXT", "SARX", "SHLX", "SHRX"):
    add(m, "BMI2", [reg(64, GPR64, "w"), reg(64, GPR64, "r"), reg(64, GPR64, "r")])
    add(m, "BMI2", [reg(64, GPR64, "w"), mem(64, "r"), reg(64, GPR64, "r")])
add("RORX", "BMI2", [reg(64, GPR64, "w"), reg(64, GPR64, "r"), imm8()])
add("MULX", "BMI2", [reg(64, GPR64, "w"), reg(64, GPR64, "w"), reg(64, GPR64, "r"),
                     ("reg", 64, "r", "RDX", True)])
for m in ("ADCX", "ADOX"):
    add(m, "ADOX_ADCX", [reg(64, GPR64, "rw"), reg(64, GPR64, "r"), flags()])

# ---------------------------------------------------------------- outside the ingested subset

for m in ("FADD", "FSUB", "FMUL", "FDIV", "FSUBR", "FDIVR", "FCOM", "FCOMP", "FUCOM", "FXCH",
          "FLD", "FST", "FSTP", "FCMOVB", "FCMOVE", "FCMOVNB", "FCMOVNE"):
    add(m, "X87", [reg(80, "ST(0)", "rw"), reg(80, ST, "r")])
for m in ("FSQRT", "FABS", "FCHS", "FSIN", "FCOS", "FPTAN", "FPATAN", "F2XM1", "FYL2X",
          "FSCALE", "FRNDINT", "FLD1", "FLDZ", "FLDPI"):
    add(m, "X87", [("reg", 80, "rw", "ST(0)")])
SYSTEM = ("HLT CLI STI CLTS INVD WBINVD WRMSR RDMSR RDPMC SWAPGS SYSRET IRETQ LGDT LIDT "
          "SGDT_PRIV LLDT LTR LMSW INVLPG INVPCID WRPKRU_PRIV XSETBV IN OUT INS OUTS "
          "MONITOR MWAIT VMCALL VMLAUNCH VMRESUME VMXOFF VMXON VMREAD VMWRITE VMPTRLD "
          "VMCLEAR INVEPT INVVPID GETSEC ENCLS WRFSBASE_PRIV").split()
for m in SYSTEM:
    add(m, "SYSTEM", [], cpl=0)
add("MOV", "SYSTEM", [("reg", 64, "w", "CR0,CR2,CR3,CR4,CR8"), reg(64, GPR64, "r")], cpl=0, suffix="_CR")


def render_operand(idx, op):
    kind, width, acc, names = op[0], op[1], op[2], op[3]
    suppressed = is_suppressed(op)
    attrs = [f'idx="{idx}"', f'type="{kind}"']
    attrs.append(f'r="{1 if "r" in acc else 0}"')
    attrs.append(f'w="{1 if "w" in acc else 0}"')
    if width:
        attrs.append(f'width="{width}"')
    if suppressed:
        attrs.append('suppressed="1"')
    if kind == "mem" and width in (8, 16, 32, 64, 128, 256, 512):
        prefix = {8: "byte", 16: "word", 32: "dword", 64: "qword", 128: "xmmword",
                  256: "ymmword", 512: "zmmword"}[width]
        attrs.append(f'memory-prefix="{prefix} ptr"')
    if len(op) >= 6:
        attrs.append(f'memory-suffix="{op[5]}"')
    if names:
        return f'    <operand {" ".join(attrs)}>{names}</operand>'
    return f'    <operand {" ".join(attrs)}/>'


def main():
    out = sys.stdout
    out.write('<?xml version="1.0" encoding="utf-8"?>\n')
    out.write("<root>\n")
    by_ext = {}
    for e in entries:
        by_ext.setdefault(e[1], []).append(e)
    for ext in sorted(by_ext):
        out.write(f"  <extension name={quoteattr(ext)}>\n")
        for asm, _, iform, ops, cpl, zeroing, rounding in by_ext[ext]:
            attrs = f"asm={quoteattr(asm)} extension={quoteattr(ext)} iform={quoteattr(iform)}"
            if zeroing:
                attrs += ' zeroing="1"'
            if rounding:
                attrs += f' rounding="{rounding}"'
            if cpl != 3:
                attrs += f' cpl="{cpl}"'
            if not ops:
                out.write(f"  <instruction {attrs}/>\n")
                continue
            out.write(f"  <instruction {attrs}>\n")
            for i, op in enumerate(ops, start=1):
                out.write(render_operand(i, op) + "\n")
            out.write("  </instruction>\n")
        out.write("  </extension>\n")
    out.write("</root>\n")
    print(f"{len(entries)} entries", file=sys.stderr)


if __name__ == "__main__":
    main()
