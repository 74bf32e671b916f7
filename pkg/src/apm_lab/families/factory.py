"""Family factory for creating SetFamily instances."""

from typing import List

from apm_lab.errors import get_error


def _get_family_registry():
    """Lazy import families to avoid circular dependencies."""
    from apm_lab.families.cube_families import FirstBitsFixed, FullCube, PrefixParity
    from apm_lab.families.file_family import FileSubset
    from apm_lab.families.random_family import RandomSubset

    return {
        "full": FullCube,
        "prefix-parity": PrefixParity,
        "first-bits-fixed": FirstBitsFixed,
        "random": RandomSubset,
        "file": FileSubset,
    }


def get_family(name: str, **options):
    """Get a set family instance.

    Args:
        name: Registry name of the family
        **options: Constructor options (the file family takes path=...)

    Returns:
        SetFamily instance

    Raises:
        ValidationError: If the name is unknown
    """
    families = _get_family_registry()
    key = name.lower()
    if key not in families:
        raise get_error("out_of_range", what="family", value=name, allowed=", ".join(families))

    family_class = families[key]
    if key == "file":
        return family_class(options.get("path"))
    return family_class()


def list_families() -> List[str]:
    """List all available family names."""
    return list(_get_family_registry().keys())
