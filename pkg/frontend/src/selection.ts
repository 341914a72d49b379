// Selection model: single focused entity plus an ordered multi-select set
// for tabular export. Pure logic, kept DOM-free for testing.

import { EntityDetail, EntityInstanceRef } from "./types.js";

export interface IndicatorLine {
  from: EntityInstanceRef;
  to: EntityInstanceRef;
}

export class SelectionModel {
  selected: string | null = null;
  detail: EntityDetail | null = null;
  private multi: string[] = [];

  /** Re-clicking the selected entity deselects it; returns the new selection. */
  toggle(entityId: string): string | null {
    if (this.selected === entityId) {
      this.selected = null;
      this.detail = null;
    } else {
      this.selected = entityId;
    }
    return this.selected;
  }

  clear(): void {
    this.selected = null;
    this.detail = null;
  }

  /** Instances to highlight for the focused entity (all of its clones). */
  highlights(): EntityInstanceRef[] {
    return this.detail ? this.detail.instances : [];
  }

  /** Lines from the clicked instance to every other instance of the entity. */
  indicatorLines(clickedInstanceId: string): IndicatorLine[] {
    if (!this.detail) return [];
    const from = this.detail.instances.find((i) => i.id === clickedInstanceId);
    if (!from) return [];
    return this.detail.instances
      .filter((i) => i.id !== clickedInstanceId)
      .map((to) => ({ from, to }));
  }

  /** Add to the export basket; duplicates collapse to one entry. */
  addToExport(entityId: string): void {
    if (!this.multi.includes(entityId)) this.multi.push(entityId);
  }

  removeFromExport(entityId: string): void {
    this.multi = this.multi.filter((id) => id !== entityId);
  }

  exportIds(): string[] {
    return [...this.multi];
  }

  get exportEnabled(): boolean {
    return this.multi.length > 0;
  }

  /** POST the basket through the supplied exporter; returns the CSV text. */
  async exportSelection(post: (ids: string[]) => Promise<string>): Promise<string> {
    if (!this.exportEnabled) throw new Error("export basket is empty");
    return post(this.exportIds());
  }
}
