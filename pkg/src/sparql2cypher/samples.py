"""
Sample queries and bundled fixtures.

SAMPLE_QUERIES holds ready-made SPARQL queries covering each pattern type
and some unsupported constructs. The fixtures are two small graphs with
datasets over them: a toy graph of people and singers, and a product
catalogue where an OPTIONAL block next to a FILTER changes the result
depending on where OPTIONAL MATCH is placed.
"""

from typing import Any

from .rdf_store import TripleStore, load_turtle
from .schemas import DatasetEntry

SAMPLE_QUERIES = {
    "singer_count": {
        "description": "Count all instances of a class (COUNT(*) over one class pattern)",
        "sparql": "select (count( *) as ?aggregation_all) \n           where { ?t1 a :singer . }",
        "cypher": "MATCH (t1:ROOT__singer)\nWITH COUNT(*) AS aggregation_all\nRETURN aggregation_all",
    },
    "pet_owner_ages": {
        "description": "Grouping, aggregate HAVING, ORDER BY on an aggregate alias, OFFSET and LIMIT",
        "sparql": """SELECT ?petName (AVG(?personAge)
AS ?avgPersonAge)
WHERE {
  ?x rdf:type :Person .
  ?x person:age ?personAge .
  ?x person:hasPet ?pet .
  ?pet a :Pet .
  ?pet pet:name ?petName .
  FILTER CONTAINS(?petName, 'b')
}
GROUP BY ?petName
HAVING (AVG(?personAge) > 30)
ORDER BY DESC(?avgPersonAge)
OFFSET 1
LIMIT 10""",
    },
    "known_people_age": {
        "description": "Average age of everyone Emma knows; needs --explicit-rels :knows without a class on ?y",
        "sparql": """PREFIX : <http://example.org/>
SELECT AVG(?ag) AS ?avgAge
WHERE {
  ?x a :Person .
  ?x :name 'Emma' .
  ?x :knows ?y .
  ?y :age ?ag .
}""",
    },
    "optional_relationship": {
        "description": "OPTIONAL relationship next to a FILTER; output depends on OPTIONAL MATCH placement",
        "sparql": """PREFIX bsbm-inst: <http://www4.wiwiss.fu-berlin.de/bizer/bsbm/v01/instances/>
PREFIX bsbm: <http://www4.wiwiss.fu-berlin.de/bizer/bsbm/v01/vocabulary/>
PREFIX rdfs: <http://www.w3.org/2000/01/rdf-schema#>
PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>
PREFIX ele: <http://purl.org/dc/elements/1.1/>

SELECT distinct ?label WHERE{
\t?review rdf:type bsbm:Review .
\t?review bsbm:reviewFor ?product .
\t?product rdf:type bsbm-inst:ProductType1.
\t?product bsbm:productPropertyNumeric1 ?pPN1 .
\t?product rdfs:label ?label.
\tOPTIONAL {
\t\t?product ele:publisher ?producer .
\t\t?producer a bsbm:Producer .
\t}
\tFILTER(?pPN1 > 1000)
}
ORDER BY(?label)
LIMIT 10""",
        "cypher": """MATCH (review:bsbm__Review)-[:bsbm__reviewFor]->(product:bsbm_inst__ProductType1)
OPTIONAL MATCH (product:bsbm_inst__ProductType1)-[:ele__publisher]->(producer:bsbm__Producer)
WHERE product.bsbm__productPropertyNumeric1 > 1000
RETURN DISTINCT product.rdfs__label AS label
ORDER BY product.rdfs__label ASC
LIMIT 10""",
    },
    "nested_select": {
        "description": "Sub-query inside WHERE (not translatable, NS2)",
        "sparql": """PREFIX : <http://example.org/>
SELECT ?name WHERE {
  ?p a :Person .
  ?p :name ?name .
  { SELECT ?p WHERE { ?p :age ?age . } }
}""",
    },
    "not_exists": {
        "description": "FILTER NOT EXISTS (not translatable, NS1)",
        "sparql": """PREFIX : <http://example.org/>
SELECT ?name WHERE {
  ?p a :Person .
  ?p :name ?name .
  FILTER NOT EXISTS { ?p :knows ?q . }
}""",
    },
}


def get_sample(name: str) -> dict[str, Any]:
    """
    Get a sample query by name.

    Raises:
        ValueError: If the sample does not exist
    """
    if name not in SAMPLE_QUERIES:
        available = ", ".join(sorted(SAMPLE_QUERIES))
        raise ValueError(f"Unknown sample '{name}'. Available samples: {available}")
    return SAMPLE_QUERIES[name]


def list_samples() -> dict[str, str]:
    """Sample names with their descriptions."""
    return {name: sample["description"] for name, sample in SAMPLE_QUERIES.items()}


# ---------------------------------------------------------------------------
# Toy dataset: one graph, five entries
# ---------------------------------------------------------------------------

TOY_DB_ID = "toy"

TOY_TURTLE = """@prefix : <http://example.org/> .

:emma a :Person ;
    :name "Emma" ;
    :age 25 ;
    :knows :yann , :yara .

:yann a :Person ;
    :name "Yann" ;
    :age 30 .

:yara a :Person ;
    :name "Yara" ;
    :age 40 .

:ada a :singer ; :name "Ada" .
:bo a :singer ; :name "Bo" .
:cy a :singer ; :name "Cy" .
"""

_TOY_QUERIES = [
    ("How many singers do we have?", SAMPLE_QUERIES["singer_count"]["sparql"]),
    (
        "Who does Emma know?",
        """PREFIX : <http://example.org/>
SELECT ?name WHERE {
  ?x a :Person .
  ?x :name 'Emma' .
  ?x :knows ?y .
  ?y a :Person .
  ?y :name ?name .
}""",
    ),
    (
        "What is the average age of the people Emma knows?",
        """PREFIX : <http://example.org/>
SELECT (AVG(?ag) AS ?avgAge) WHERE {
  ?x a :Person .
  ?x :name 'Emma' .
  ?x :knows ?y .
  ?y a :Person .
  ?y :age ?ag .
}""",
    ),
    (
        "Which people are older than 26, oldest first?",
        """PREFIX : <http://example.org/>
SELECT ?name ?age WHERE {
  ?p a :Person .
  ?p :name ?name .
  ?p :age ?age .
  FILTER(?age > 26)
}
ORDER BY DESC(?age)""",
    ),
    (
        "What are the first two singer names alphabetically?",
        """PREFIX : <http://example.org/>
SELECT ?name WHERE {
  ?s a :singer .
  ?s :name ?name .
}
ORDER BY ?name
LIMIT 2""",
    ),
]


def toy_store() -> TripleStore:
    return load_turtle(TOY_TURTLE)


def toy_dataset() -> list[DatasetEntry]:
    """Five entries over the toy graph; every one translates and matches."""
    return [
        DatasetEntry(db_id=TOY_DB_ID, question=question, sparql=sparql, namespaces=["XMLSchema"])
        for question, sparql in _TOY_QUERIES
    ]


# ---------------------------------------------------------------------------
# Product catalogue for the OPTIONAL/FILTER placement check
# ---------------------------------------------------------------------------

PRODUCTS_DB_ID = "products"

_PRODUCT_PREFIXES = """@prefix bsbm-inst: <http://www4.wiwiss.fu-berlin.de/bizer/bsbm/v01/instances/> .
@prefix bsbm: <http://www4.wiwiss.fu-berlin.de/bizer/bsbm/v01/vocabulary/> .
@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
@prefix ele: <http://purl.org/dc/elements/1.1/> .
"""


def products_turtle(qualifying: int = 12, filtered_out: int = 5) -> str:
    """
    Products with one review each; every other product has a publisher.

    Products failing the numeric filter are labelled so that they sort
    before all qualifying ones.
    """
    lines = [_PRODUCT_PREFIXES, "bsbm-inst:Producer1 a bsbm:Producer .", ""]
    for index in range(filtered_out + qualifying):
        passes = index >= filtered_out
        label = f"{'b' if passes else 'a'}-product-{index:02d}"
        numeric = 1500 + index if passes else 500 + index
        lines.append(
            f"bsbm-inst:Product{index} a bsbm-inst:ProductType1 ;\n"
            f'    rdfs:label "{label}" ;\n'
            f"    bsbm:productPropertyNumeric1 {numeric} ."
        )
        lines.append(f"bsbm-inst:Review{index} a bsbm:Review ; bsbm:reviewFor bsbm-inst:Product{index} .")
        if index % 2 == 0:
            lines.append(f"bsbm-inst:Product{index} ele:publisher bsbm-inst:Producer1 .")
    return "\n".join(lines) + "\n"


def products_store() -> TripleStore:
    return load_turtle(products_turtle())


def products_dataset() -> list[DatasetEntry]:
    return [
        DatasetEntry(
            db_id=PRODUCTS_DB_ID,
            question="Labels of products over 1000 with their optional publisher",
            sparql=SAMPLE_QUERIES["optional_relationship"]["sparql"],
        )
    ]
