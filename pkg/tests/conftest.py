import pytest

from trag import QaExample, TableDoc


@pytest.fixture
def ikar_table():
    return TableDoc(id="ikar", title="Ikar",
                    header=["Editor", "Year"],
                    rows=[["A. Smith", "1990"]])


@pytest.fixture
def phantom_table():
    return TableDoc(
        id="phantom",
        title="The Phantom of the Opera original London cast",
        header=["Role", "Actor", "Year"],
        rows=[
            ["The Phantom", "Michael Crawford", "1986"],
            ["Christine", "Sarah Brightman", "1986"],
            ["Raoul", "Steve Barton", "1986"],
        ])


@pytest.fixture
def tiny_corpus():
    return [
        TableDoc(id="t1", title="Fruit prices",
                 header=["fruit", "price"],
                 rows=[["apple", "3"], ["banana", "2"]]),
        TableDoc(id="t2", title="Capitals",
                 header=["country", "capital"],
                 rows=[["France", "Paris"], ["Peru", "Lima"]]),
        TableDoc(id="t3", title="Planets",
                 header=["planet", "moons"],
                 rows=[["Mars", "2"], ["Earth", "1"]]),
    ]


@pytest.fixture
def tiny_qa():
    return [
        QaExample(qid="q1", question="price of apple fruit",
                  gold_table_id="t1", answers=["3"]),
        QaExample(qid="q2", question="capital of France country",
                  gold_table_id="t2", answers=["Paris"]),
    ]
