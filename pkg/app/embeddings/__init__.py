from .base_embedding import BaseEmbedding, embed_eval, embed_jacobian, reduce_point
from .linear_embedding import LinearEmbedding, build_linear_embedding, build_pod_embedding
from .quadratic_embedding import QuadraticEmbedding, build_quadratic_embedding, ridge_fit

__all__ = [
    'BaseEmbedding',
    'embed_eval',
    'embed_jacobian',
    'reduce_point',
    'LinearEmbedding',
    'build_linear_embedding',
    'build_pod_embedding',
    'QuadraticEmbedding',
    'build_quadratic_embedding',
    'ridge_fit',
]
