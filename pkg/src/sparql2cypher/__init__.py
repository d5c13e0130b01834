"""
sparql2cypher - Translate SPARQL SELECT queries to Cypher and check the translations against both stores.
"""

__version__ = "0.1.0"
