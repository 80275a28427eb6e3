"""Program ingestion: ELF loading, the mini-assembler and static size analysis."""
