from typing import Dict, Mapping, Optional, Sequence
import logging

from common.schemas import Stage
from corpus_service.assets import STAGE_ASSET_DIRS, render_template
from corpus_service.schemas import CaseRecord, FewShotExample, PromptAssets
from llm_service.schemas import ChatRequest, GenerationConfig
from pipeline_service.schemas import EvidenceSelection, InterpretMode, InterpretedQuery

logger = logging.getLogger(__name__)

ALIGN_CORRECTION = (
    "Your previous reply could not be parsed. Reply again with only a JSON array of "
    'objects of the form {"answer_sentence": <int>, "evidence": [<int>, ...]} and no other text.'
)


class PromptBuilder:
    """Builder for the chat requests of the four pipeline stages"""

    def __init__(self, assets: Mapping[Stage, PromptAssets], configs: Mapping[Stage, GenerationConfig]):
        self.assets = assets
        self.configs = configs

    def build_interpret_request(self, case: CaseRecord, mode: InterpretMode = InterpretMode.FEW_SHOT) -> ChatRequest:
        """Persona + rules + (optionally) the three worked examples + the raw narrative and question"""
        assets = self.assets[Stage.INTERPRET]
        examples = self._format_examples(assets.few_shot_examples) if mode == InterpretMode.FEW_SHOT else ""
        user = self._render(
            assets,
            {
                "examples": examples,
                "narrative": case.patient_narrative.strip(),
                "question": case.patient_question.strip(),
            },
        )
        return self._request(
            Stage.INTERPRET,
            assets,
            user,
            {"case_id": case.case_id, "question": case.patient_question, "mode": mode.value},
        )

    def build_scoring_request(self, case: CaseRecord, query: str) -> ChatRequest:
        assets = self.assets[Stage.EVIDENCE]
        user = self._render(
            assets,
            {
                "examples": self._format_examples(assets.few_shot_examples),
                "query": query.strip(),
                "note": self._format_numbered(case.sentences(range(1, case.note_len + 1))),
                "count": str(case.note_len),
            },
        )
        return self._request(
            Stage.EVIDENCE,
            assets,
            user,
            {
                "case_id": case.case_id,
                "query": query,
                "sentences": [[sentence.index, sentence.text] for sentence in case.note],
            },
        )

    def build_generation_request(
        self,
        case: CaseRecord,
        query: InterpretedQuery,
        evidence: EvidenceSelection,
    ) -> ChatRequest:
        """Three context blocks: interpretation, filtered evidence, then the full note as backup"""
        assets = self.assets[Stage.GENERATE]
        evidence_sentences = case.sentences(evidence.indices)
        user = self._render(
            assets,
            {
                "query": query.query,
                "evidence": self._format_numbered(evidence_sentences, evidence.indices),
                "note": self._format_numbered(case.sentences(range(1, case.note_len + 1))),
            },
        )
        return self._request(
            Stage.GENERATE,
            assets,
            user,
            {"case_id": case.case_id, "query": query.query, "evidence_sentences": evidence_sentences},
        )

    def build_alignment_request(self, case: CaseRecord, answer_sentences: Sequence[str]) -> ChatRequest:
        assets = self.assets[Stage.ALIGN]
        user = self._render(
            assets,
            {
                "examples": self._format_examples(assets.few_shot_examples),
                "answer": self._format_numbered(answer_sentences),
                "note": self._format_numbered(case.sentences(range(1, case.note_len + 1))),
            },
        )
        return self._request(
            Stage.ALIGN,
            assets,
            user,
            {
                "case_id": case.case_id,
                "answer_sentences": list(answer_sentences),
                "sentences": [[sentence.index, sentence.text] for sentence in case.note],
            },
        )

    def build_alignment_reprompt(self, request: ChatRequest, reply: str) -> ChatRequest:
        return request.followed_by(reply, ALIGN_CORRECTION)

    def _request(self, stage: Stage, assets: PromptAssets, user: str, metadata: Dict) -> ChatRequest:
        return ChatRequest.single_turn(
            assets.system_persona,
            user,
            self.configs[stage],
            task=STAGE_ASSET_DIRS[stage],
            metadata=metadata,
        )

    def _render(self, assets: PromptAssets, values: Dict[str, str]) -> str:
        return render_template(assets.template, values, assets.template_id)

    def _format_examples(self, examples: Sequence[FewShotExample]) -> str:
        blocks = []
        for number, example in enumerate(examples, start=1):
            blocks.append(f"Example {number}\nInput:\n{example.input.strip()}\nOutput:\n{example.output.strip()}")
        return "\n\n".join(blocks)

    def _format_numbered(self, sentences: Sequence[str], indices: Optional[Sequence[int]] = None) -> str:
        """One sentence per line, prefixed by its id"""
        indices = list(indices) if indices is not None else list(range(1, len(sentences) + 1))
        return "\n".join(f"[{index}] {text}" for index, text in zip(indices, sentences))
