from secure_kgcomm.kb import KnowledgeBase
from secure_kgcomm.kgraph import KnowledgeGraph
from secure_kgcomm.metrics import bleu
from secure_kgcomm.recovery import TemplateRealizer, realize


def test_template_rendering(toy_kb):
    g = KnowledgeGraph((('Alan_Turing', 'born_in', 'London'),))
    assert realize(g, toy_kb) == 'Alan Turing was born in London.'


def test_one_sentence_per_triple_in_canonical_order(toy_kb):
    g = KnowledgeGraph((('Seine', 'flows_through', 'Paris'), ('Paris', 'capital_of', 'France')))
    assert realize(g, toy_kb) == 'Paris is the capital of France. Seine flows through Paris.'


def test_missing_template_falls_back_to_relation_words(toy_kb):
    g = KnowledgeGraph((('Ada_Lovelace', 'worked_with', 'Charles_Babbage'),))
    assert realize(g, toy_kb) == 'Ada Lovelace worked with Charles Babbage.'
    assert realize(g, KnowledgeBase.empty()) == realize(g, toy_kb)


def test_empty_graph():
    assert realize(KnowledgeGraph(), KnowledgeBase.empty()) == ''


def test_custom_realizer(toy_kb):
    class Listing:
        def realize(self, g, kb):
            return '; '.join(' '.join(t) for t in g.triples)

    g = KnowledgeGraph((('a', 'r', 'b'),))
    assert realize(g, toy_kb, Listing()) == 'a r b'
    assert realize(g, toy_kb, TemplateRealizer()) == 'a r b.'


def test_realized_text_scores_itself_perfectly(fixture_kb):
    g = KnowledgeGraph((('Leonardo_da_Vinci', 'painted', 'Mona_Lisa'), ('Leonardo_da_Vinci', 'born_in', 'Vinci')))
    text = realize(g, fixture_kb)
    assert bleu(text, text) == 1.0
