"""Linear algebra over Z2 with Python ints as bit vectors."""


def reduce_vector(basis, vec):
    """Reduce ``vec`` against an echelon ``basis`` (dict pivot -> row)."""
    while vec:
        top = vec.bit_length() - 1
        row = basis.get(top)
        if row is None:
            return vec
        vec ^= row
    return 0


def insert_vector(basis, vec):
    """Add ``vec`` to the echelon basis; return True iff the rank grew."""
    vec = reduce_vector(basis, vec)
    if not vec:
        return False
    basis[vec.bit_length() - 1] = vec
    return True


def rank_z2(vectors):
    """Rank over Z2 of an iterable of int bit vectors (Gaussian elimination)."""
    basis = {}
    return sum(1 for v in vectors if insert_vector(basis, int(v)))


def bits_to_int(bits):
    out = 0
    for i, b in enumerate(bits):
        if b % 2:
            out |= 1 << i
    return out


def int_to_bits(value, width):
    return [(value >> i) & 1 for i in range(width)]
