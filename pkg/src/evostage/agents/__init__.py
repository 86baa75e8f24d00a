from .extract import ExtractionError, extract_code, join_stages, split_stages
from .providers import HTTPProvider, LLMRequest, MockProvider, Provider, ProviderError, fixture_path
from .roles import AgentConfig, AgentFailure, Agents, CodeArtifact, StageGoal, coder_role
from .templates import TEMPLATES, PromptTemplate, TemplateError, render_prompt
