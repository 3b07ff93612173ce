"""Reference adapter processes speaking the line-delimited JSON protocol.

Run them as ``python -m topaug.adapters.echo`` or
``python -m topaug.adapters.pcfg_parser GRAMMAR.json``.
"""
