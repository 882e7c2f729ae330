import enum


class KernelKind(str, enum.Enum):
    """Gelation kernels of the three discrete coalescents"""

    KINGMAN = "kingman"
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"

    def weight(self, a: int, b: int) -> int:
        """
        Merge weight of two blocks of sizes a and b

        Kingman counts ordered root pairs, hence 2 per unordered block pair.
        """
        if self is KernelKind.KINGMAN:
            return 2
        if self is KernelKind.ADDITIVE:
            return a + b
        return a * b
