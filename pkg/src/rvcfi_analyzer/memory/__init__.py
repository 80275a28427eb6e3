from .image import PAGE_SIZE, AccessKind, MemoryImage, PageAttr, Region

__all__ = ["PAGE_SIZE", "AccessKind", "MemoryImage", "PageAttr", "Region"]
