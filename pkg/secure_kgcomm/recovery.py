from typing import Protocol

from .kb import KnowledgeBase, display_name
from .kgraph import KnowledgeGraph


class Realizer(Protocol):
    def realize(self, g: KnowledgeGraph, kb: KnowledgeBase) -> str:
        ...


class TemplateRealizer:
    """One sentence per triple, in canonical triple order, through the KB templates."""

    def realize(self, g: KnowledgeGraph, kb: KnowledgeBase) -> str:
        sentences = []
        for head, relation, tail in g.triples:
            text = kb.template_for(relation)
            text = text.replace('{head}', display_name(head)).replace('{tail}', display_name(tail))
            sentences.append(text.replace('{relation}', display_name(relation)))
        return ' '.join(sentences)


default_realizer = TemplateRealizer()


def realize(g: KnowledgeGraph, kb: KnowledgeBase, realizer: Realizer = default_realizer) -> str:
    return realizer.realize(g, kb)
