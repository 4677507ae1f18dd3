import { Component, Input } from "@angular/core";

@Component({
  selector: "app-tile-965ce498",
  standalone: true,
  imports: [],
  templateUrl: "./tile-965ce498.component.html",
})
export class Tile965ce498Component {
  @Input({ required: true }) media_0!: string;
  @Input({ required: true }) text_1!: string;
  @Input({ required: true }) link_3!: string;
}
