from pydantic import BaseModel, ConfigDict


class FrozenSchema(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")
