"""Shared pydantic base and field types for result reports."""

from typing import Any, Dict, Union

from pydantic import BaseModel, ConfigDict, InstanceOf, PlainSerializer
from typing_extensions import Annotated

from .qmatrix import QMatrix
from .quaternion import Quaternion


def serialize_value(value: Union[QMatrix, Quaternion]) -> Any:
    if isinstance(value, QMatrix):
        return value.to_json()
    return value.to_list()


MatrixValue = Annotated[InstanceOf[QMatrix], PlainSerializer(serialize_value, when_used="json")]
OperatorValue = Annotated[
    Union[InstanceOf[QMatrix], InstanceOf[Quaternion]],
    PlainSerializer(serialize_value, when_used="json"),
]


class ReportModel(BaseModel):
    """Immutable report; serialized with the camelCase aliases of the JSON output."""

    model_config = ConfigDict(populate_by_name=True, frozen=True, arbitrary_types_allowed=True)

    def to_json(self) -> Dict[str, Any]:
        return self.model_dump(by_alias=True, mode="json")
